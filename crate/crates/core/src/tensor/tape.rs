use std::ops::Range;
use std::sync::Arc;

use super::Tensor;
use crate::error::TensorError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Per-feature statistics of one training-mode batch-norm application.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Biased (population) variance over the batch.
    pub var: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulColumn(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, Range<usize>),
    SliceRows(Var, Range<usize>),
    Exp(Var),
    Log(Var),
    Sigmoid(Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    Softplus(Var),
    BceWithLogits(Var, Var),
    Powf(Var, f64),
    GatherRows(Var, Arc<[usize]>),
    SegmentSum(Var, Arc<[usize]>),
    SegmentMean(Var, Arc<[usize]>, Vec<usize>),
    SegmentMax(Var, Vec<Option<usize>>),
    SegmentSoftmax(Var, Arc<[usize]>),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        train: bool,
    },
    Sum(Var),
    Mean(Var),
    SumSquares(Var),
}

/// Records forward operations for one reverse-mode pass.
///
/// Every operation produces a matrix; tensors of other ranks are viewed as
/// `shape[0] × rest`. Gradients flow only into values that depend on a leaf
/// created with [`Tape::param`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    values: Vec<Tensor>,
    ops: Vec<Op>,
    needs_grad: Vec<bool>,
    grads: Option<Vec<Option<Tensor>>>,
}

fn dims(t: &Tensor) -> (usize, usize) {
    (t.rows(), t.cols())
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.values.push(value);
        self.ops.push(op);
        self.needs_grad.push(needs_grad);
        Var(self.values.len() - 1)
    }

    /// A leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf treated as fixed input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.needs_grad[v.0]
    }

    /// Gradient of the last backward pass, or `None` if backward has not run
    /// or `v` does not influence the loss.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.as_ref()?.get(v.0)?.as_ref()
    }

    /// Like [`Tape::grad`] with zeros in place of `None`.
    pub fn grad_or_zeros(&self, v: Var) -> Tensor {
        self.grad(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(self.values[v.0].shape()))
    }

    /// Drops gradients so that [`Tape::backward`] may run again.
    pub fn reset_grads(&mut self) {
        self.grads = None;
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let value = self.values[x.0].map(f);
        let (r, c) = dims(&value);
        let value = Tensor::matrix(r, c, value.into_data());
        let ng = self.needs_grad[x.0];
        self.push(value, op, ng)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        let (ta, tb) = (&self.values[a.0], &self.values[b.0]);
        if dims(ta) != dims(tb) {
            return Err(mismatch(op, ta, tb));
        }
        Ok(())
    }

    fn zip(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (ta, tb) = (&self.values[a.0], &self.values[b.0]);
        let (r, c) = dims(ta);
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let ng = self.needs_grad[a.0] || self.needs_grad[b.0];
        self.push(Tensor::matrix(r, c, data), op, ng)
    }

    /// `a · b`. Zero entries of `a` are skipped, which pays off on sparse
    /// fingerprint inputs.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (&self.values[a.0], &self.values[b.0]);
        let ((n, k), (k2, m)) = (dims(ta), dims(tb));
        if k != k2 {
            return Err(mismatch("matmul", ta, tb));
        }
        let mut out = vec![0.0; n * m];
        matmul_into(ta.data(), tb.data(), &mut out, n, k, m);
        let ng = self.needs_grad[a.0] || self.needs_grad[b.0];
        Ok(self.push(Tensor::matrix(n, m, out), Op::MatMul(a, b), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("add", a, b)?;
        Ok(self.zip(a, b, |x, y| x + y, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("sub", a, b)?;
        Ok(self.zip(a, b, |x, y| x - y, Op::Sub(a, b)))
    }

    /// Elementwise product of equal shapes.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip(a, b, |x, y| x * y, Op::Mul(a, b)))
    }

    /// Adds a `1 × c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (ta, tr) = (&self.values[a.0], &self.values[row.0]);
        let (r, c) = dims(ta);
        if dims(tr) != (1, c) {
            return Err(mismatch("add_row", ta, tr));
        }
        let bias = tr.data();
        let mut data = ta.data().to_vec();
        for chunk in data.chunks_mut(c.max(1)) {
            for (x, b) in chunk.iter_mut().zip(bias) {
                *x += b;
            }
        }
        let ng = self.needs_grad[a.0] || self.needs_grad[row.0];
        Ok(self.push(Tensor::matrix(r, c, data), Op::AddRow(a, row), ng))
    }

    /// Scales row `i` of `a` by `col[i]`, with `col` of shape `r × 1`.
    pub fn mul_column(&mut self, a: Var, col: Var) -> Result<Var, TensorError> {
        let (ta, tc) = (&self.values[a.0], &self.values[col.0]);
        let (r, c) = dims(ta);
        if dims(tc) != (r, 1) {
            return Err(mismatch("mul_column", ta, tc));
        }
        let mut data = ta.data().to_vec();
        for (i, s) in tc.data().iter().enumerate() {
            for x in &mut data[i * c..(i + 1) * c] {
                *x *= s;
            }
        }
        let ng = self.needs_grad[a.0] || self.needs_grad[col.0];
        Ok(self.push(Tensor::matrix(r, c, data), Op::MulColumn(a, col), ng))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        self.unary(a, |x| x * factor, Op::Scale(a, factor))
    }

    pub fn add_scalar(&mut self, a: Var, shift: f64) -> Var {
        self.unary(a, |x| x + shift, Op::AddScalar(a))
    }

    /// Side-by-side concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::Invalid {
                op: "concat_cols",
                message: "no inputs".into(),
            });
        };
        let rows = self.values[first.0].rows();
        for &p in parts {
            if self.values[p.0].rows() != rows {
                return Err(mismatch("concat_cols", &self.values[first.0], &self.values[p.0]));
            }
        }
        let total: usize = parts.iter().map(|p| self.values[p.0].cols()).sum();
        let mut data = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.values[p.0].row(i));
            }
        }
        let ng = parts.iter().any(|p| self.needs_grad[p.0]);
        Ok(self.push(Tensor::matrix(rows, total, data), Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn slice_cols(&mut self, a: Var, cols: Range<usize>) -> Result<Var, TensorError> {
        let ta = &self.values[a.0];
        let (r, c) = dims(ta);
        if cols.start > cols.end || cols.end > c {
            return Err(TensorError::Invalid {
                op: "slice_cols",
                message: format!("columns {cols:?} out of {c}"),
            });
        }
        let mut data = Vec::with_capacity(r * cols.len());
        for i in 0..r {
            data.extend_from_slice(&ta.row(i)[cols.clone()]);
        }
        let w = cols.len();
        let ng = self.needs_grad[a.0];
        Ok(self.push(Tensor::matrix(r, w, data), Op::SliceCols(a, cols), ng))
    }

    pub fn slice_rows(&mut self, a: Var, rows: Range<usize>) -> Result<Var, TensorError> {
        let ta = &self.values[a.0];
        let (r, c) = dims(ta);
        if rows.start > rows.end || rows.end > r {
            return Err(TensorError::Invalid {
                op: "slice_rows",
                message: format!("rows {rows:?} out of {r}"),
            });
        }
        let data = ta.data()[rows.start * c..rows.end * c].to_vec();
        let ng = self.needs_grad[a.0];
        Ok(self.push(Tensor::matrix(rows.len(), c, data), Op::SliceRows(a, rows), ng))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, f64::ln, Op::Log(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        self.unary(a, |x| if x > 0.0 { x } else { slope * x }, Op::LeakyRelu(a, slope))
    }

    /// `ln(1 + eˣ)` in overflow-free form.
    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, softplus, Op::Softplus(a))
    }

    /// Elementwise `max(x, 0) - x·y + ln(1 + e^{-|x|})`, the cross-entropy of
    /// `σ(x)` against targets `y`. Only `logits` receives a gradient.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Var) -> Result<Var, TensorError> {
        self.same_shape("bce_with_logits", logits, targets)?;
        let ng = self.needs_grad[logits.0];
        let (tx, ty) = (&self.values[logits.0], &self.values[targets.0]);
        let (r, c) = dims(tx);
        let data = tx
            .data()
            .iter()
            .zip(ty.data())
            .map(|(&x, &y)| x.max(0.0) - x * y + (-x.abs()).exp().ln_1p())
            .collect();
        Ok(self.push(Tensor::matrix(r, c, data), Op::BceWithLogits(logits, targets), ng))
    }

    /// `xᵖ` for nonnegative `x`.
    pub fn powf(&mut self, a: Var, p: f64) -> Var {
        self.unary(a, |x| x.powf(p), Op::Powf(a, p))
    }

    /// Row `i` of the result is row `index[i]` of `a`.
    pub fn gather_rows(&mut self, a: Var, index: &Arc<[usize]>) -> Result<Var, TensorError> {
        let ta = &self.values[a.0];
        let (r, c) = dims(ta);
        if let Some(&bad) = index.iter().find(|&&i| i >= r) {
            return Err(TensorError::Invalid {
                op: "gather_rows",
                message: format!("row {bad} out of {r}"),
            });
        }
        let mut data = Vec::with_capacity(index.len() * c);
        for &i in index.iter() {
            data.extend_from_slice(ta.row(i));
        }
        let ng = self.needs_grad[a.0];
        Ok(self.push(Tensor::matrix(index.len(), c, data), Op::GatherRows(a, index.clone()), ng))
    }

    fn check_segments(
        &self,
        op: &'static str,
        a: Var,
        ids: &[usize],
        segments: usize,
    ) -> Result<(), TensorError> {
        let r = self.values[a.0].rows();
        if ids.len() != r {
            return Err(TensorError::Invalid {
                op,
                message: format!("{} segment ids for {r} rows", ids.len()),
            });
        }
        if let Some(&bad) = ids.iter().find(|&&s| s >= segments) {
            return Err(TensorError::Invalid {
                op,
                message: format!("segment id {bad} out of {segments}"),
            });
        }
        Ok(())
    }

    /// Row `s` of the result sums the rows of `a` with id `s`.
    pub fn segment_sum(&mut self, a: Var, ids: &Arc<[usize]>, segments: usize) -> Result<Var, TensorError> {
        self.check_segments("segment_sum", a, ids, segments)?;
        let ta = &self.values[a.0];
        let c = ta.cols();
        let mut data = vec![0.0; segments * c];
        for (i, &s) in ids.iter().enumerate() {
            for (o, x) in data[s * c..(s + 1) * c].iter_mut().zip(ta.row(i)) {
                *o += x;
            }
        }
        let ng = self.needs_grad[a.0];
        Ok(self.push(Tensor::matrix(segments, c, data), Op::SegmentSum(a, ids.clone()), ng))
    }

    /// Per-segment mean; empty segments give zero rows.
    pub fn segment_mean(&mut self, a: Var, ids: &Arc<[usize]>, segments: usize) -> Result<Var, TensorError> {
        self.check_segments("segment_mean", a, ids, segments)?;
        let ta = &self.values[a.0];
        let c = ta.cols();
        let mut counts = vec![0usize; segments];
        let mut data = vec![0.0; segments * c];
        for (i, &s) in ids.iter().enumerate() {
            counts[s] += 1;
            for (o, x) in data[s * c..(s + 1) * c].iter_mut().zip(ta.row(i)) {
                *o += x;
            }
        }
        for (s, &n) in counts.iter().enumerate() {
            if n > 0 {
                for o in &mut data[s * c..(s + 1) * c] {
                    *o /= n as f64;
                }
            }
        }
        let ng = self.needs_grad[a.0];
        Ok(self.push(
            Tensor::matrix(segments, c, data),
            Op::SegmentMean(a, ids.clone(), counts),
            ng,
        ))
    }

    /// Per-segment, per-column maximum. The gradient goes to the first row
    /// attaining it; empty segments give zero rows.
    pub fn segment_max(&mut self, a: Var, ids: &Arc<[usize]>, segments: usize) -> Result<Var, TensorError> {
        self.check_segments("segment_max", a, ids, segments)?;
        let ta = &self.values[a.0];
        let c = ta.cols();
        let mut arg: Vec<Option<usize>> = vec![None; segments * c];
        for (i, &s) in ids.iter().enumerate() {
            for (j, &x) in ta.row(i).iter().enumerate() {
                let slot = &mut arg[s * c + j];
                if slot.is_none_or(|k| x > ta.data()[k * c + j]) {
                    *slot = Some(i);
                }
            }
        }
        let data = arg
            .iter()
            .enumerate()
            .map(|(p, k)| k.map_or(0.0, |k| ta.data()[k * c + p % c]))
            .collect();
        let ng = self.needs_grad[a.0];
        Ok(self.push(Tensor::matrix(segments, c, data), Op::SegmentMax(a, arg), ng))
    }

    /// Softmax over the rows sharing a segment id, independently per column.
    pub fn segment_softmax(&mut self, a: Var, ids: &Arc<[usize]>, segments: usize) -> Result<Var, TensorError> {
        self.check_segments("segment_softmax", a, ids, segments)?;
        let ta = &self.values[a.0];
        let (r, c) = dims(ta);
        let mut max = vec![f64::NEG_INFINITY; segments * c];
        for (i, &s) in ids.iter().enumerate() {
            for (m, &x) in max[s * c..(s + 1) * c].iter_mut().zip(ta.row(i)) {
                *m = m.max(x);
            }
        }
        let mut data = vec![0.0; r * c];
        let mut total = vec![0.0; segments * c];
        for (i, &s) in ids.iter().enumerate() {
            for j in 0..c {
                let e = (ta.data()[i * c + j] - max[s * c + j]).exp();
                data[i * c + j] = e;
                total[s * c + j] += e;
            }
        }
        for (i, &s) in ids.iter().enumerate() {
            for j in 0..c {
                data[i * c + j] /= total[s * c + j];
            }
        }
        let ng = self.needs_grad[a.0];
        Ok(self.push(Tensor::matrix(r, c, data), Op::SegmentSoftmax(a, ids.clone()), ng))
    }

    /// Training-mode batch norm over the rows of `x`; `gamma` and `beta` are
    /// `1 × c`. Also returns the batch statistics.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    ) -> Result<(Var, BatchStats), TensorError> {
        let (r, c) = self.check_norm_params(x, gamma, beta)?;
        let tx = &self.values[x.0];
        let mut mean = vec![0.0; c];
        for i in 0..r {
            for (m, v) in mean.iter_mut().zip(tx.row(i)) {
                *m += v;
            }
        }
        let n = r.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; c];
        for i in 0..r {
            for ((s, v), m) in var.iter_mut().zip(tx.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= n);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let stats = BatchStats { mean, var, count: r };
        let out = self.normalize(x, gamma, beta, &stats.mean, inv_std, true);
        Ok((out, stats))
    }

    /// Inference-mode batch norm with fixed statistics: an affine map per column.
    pub fn batch_norm_infer(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &[f64],
        var: &[f64],
        eps: f64,
    ) -> Result<Var, TensorError> {
        let (_, c) = self.check_norm_params(x, gamma, beta)?;
        if mean.len() != c || var.len() != c {
            return Err(TensorError::ShapeMismatch {
                op: "batch_norm_infer",
                lhs: self.values[x.0].shape().to_vec(),
                rhs: vec![mean.len(), var.len()],
            });
        }
        let inv_std = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        Ok(self.normalize(x, gamma, beta, mean, inv_std, false))
    }

    fn check_norm_params(&self, x: Var, gamma: Var, beta: Var) -> Result<(usize, usize), TensorError> {
        let tx = &self.values[x.0];
        let (r, c) = dims(tx);
        for p in [gamma, beta] {
            let tp = &self.values[p.0];
            if dims(tp) != (1, c) {
                return Err(mismatch("batch_norm", tx, tp));
            }
        }
        Ok((r, c))
    }

    fn normalize(&mut self, x: Var, gamma: Var, beta: Var, mean: &[f64], inv_std: Vec<f64>, train: bool) -> Var {
        let tx = &self.values[x.0];
        let (r, c) = dims(tx);
        let (g, b) = (self.values[gamma.0].data(), self.values[beta.0].data());
        let mut xhat = Vec::with_capacity(r * c);
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for (j, v) in tx.row(i).iter().enumerate() {
                let h = (v - mean[j]) * inv_std[j];
                xhat.push(h);
                out.push(g[j] * h + b[j]);
            }
        }
        let ng = self.needs_grad[x.0] || self.needs_grad[gamma.0] || self.needs_grad[beta.0];
        self.push(
            Tensor::matrix(r, c, out),
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                train,
            },
            ng,
        )
    }

    /// Sum of all entries as a `1 × 1` value.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.values[a.0].data().iter().sum();
        let ng = self.needs_grad[a.0];
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    /// Mean of all entries as a `1 × 1` value.
    pub fn mean(&mut self, a: Var) -> Var {
        let t = &self.values[a.0];
        let s = t.data().iter().sum::<f64>() / t.len().max(1) as f64;
        let ng = self.needs_grad[a.0];
        self.push(Tensor::scalar(s), Op::Mean(a), ng)
    }

    /// Sum of squared entries as a `1 × 1` value.
    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s = self.values[a.0].data().iter().map(|x| x * x).sum();
        let ng = self.needs_grad[a.0];
        self.push(Tensor::scalar(s), Op::SumSquares(a), ng)
    }

    /// Reverse-mode pass from a `1 × 1` loss.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        if self.grads.is_some() {
            return Err(TensorError::BackwardTwice);
        }
        let lt = &self.values[loss.0];
        if lt.len() != 1 {
            return Err(TensorError::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.values.len()];
        grads[loss.0] = Some(Tensor::filled(lt.shape(), 1.0));
        for node in (0..=loss.0).rev() {
            if !self.needs_grad[node] {
                continue;
            }
            let Some(g) = grads[node].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[node] = Some(g);
        }
        self.grads = Some(grads);
        Ok(())
    }

    fn propagate(&self, node: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = &self.values[node];
        let gd = g.data();
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !self.needs_grad[v.0] {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| Tensor::zeros(self.values[v.0].shape()));
            f(slot.data_mut());
        };
        match &self.ops[node] {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (&self.values[a.0], &self.values[b.0]);
                let ((n, k), m) = (dims(ta), tb.cols());
                acc(*a, &mut |ga| {
                    for i in 0..n {
                        let grow = &gd[i * m..(i + 1) * m];
                        for p in 0..k {
                            let brow = &tb.data()[p * m..(p + 1) * m];
                            ga[i * k + p] += dot(grow, brow);
                        }
                    }
                });
                acc(*b, &mut |gb| {
                    for i in 0..n {
                        let grow = &gd[i * m..(i + 1) * m];
                        for p in 0..k {
                            let x = ta.data()[i * k + p];
                            if x != 0.0 {
                                axpy(x, grow, &mut gb[p * m..(p + 1) * m]);
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |ga| axpy(1.0, gd, ga));
                acc(*b, &mut |gb| axpy(1.0, gd, gb));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |ga| axpy(1.0, gd, ga));
                acc(*b, &mut |gb| axpy(-1.0, gd, gb));
            }
            Op::AddRow(a, row) => {
                acc(*a, &mut |ga| axpy(1.0, gd, ga));
                let c = out.cols().max(1);
                acc(*row, &mut |gr| {
                    for chunk in gd.chunks(c) {
                        axpy(1.0, chunk, gr);
                    }
                });
            }
            Op::Mul(a, b) => {
                let (da, db) = (self.values[a.0].data(), self.values[b.0].data());
                acc(*a, &mut |ga| {
                    for ((o, g), y) in ga.iter_mut().zip(gd).zip(db) {
                        *o += g * y;
                    }
                });
                acc(*b, &mut |gb| {
                    for ((o, g), x) in gb.iter_mut().zip(gd).zip(da) {
                        *o += g * x;
                    }
                });
            }
            Op::MulColumn(a, col) => {
                let (ta, tc) = (&self.values[a.0], &self.values[col.0]);
                let c = ta.cols();
                acc(*a, &mut |ga| {
                    for (i, s) in tc.data().iter().enumerate() {
                        axpy(*s, &gd[i * c..(i + 1) * c], &mut ga[i * c..(i + 1) * c]);
                    }
                });
                acc(*col, &mut |gc| {
                    for (i, o) in gc.iter_mut().enumerate() {
                        *o += dot(&gd[i * c..(i + 1) * c], ta.row(i));
                    }
                });
            }
            Op::Scale(a, f) => acc(*a, &mut |ga| axpy(*f, gd, ga)),
            Op::AddScalar(a) => acc(*a, &mut |ga| axpy(1.0, gd, ga)),
            Op::ConcatCols(parts) => {
                let rows = out.rows();
                let total = out.cols();
                let mut offset = 0;
                for p in parts {
                    let w = self.values[p.0].cols();
                    acc(*p, &mut |gp| {
                        for i in 0..rows {
                            axpy(1.0, &gd[i * total + offset..i * total + offset + w], &mut gp[i * w..(i + 1) * w]);
                        }
                    });
                    offset += w;
                }
            }
            Op::SliceCols(a, cols) => {
                let c = self.values[a.0].cols();
                let w = cols.len();
                acc(*a, &mut |ga| {
                    for i in 0..out.rows() {
                        axpy(1.0, &gd[i * w..(i + 1) * w], &mut ga[i * c + cols.start..i * c + cols.end]);
                    }
                });
            }
            Op::SliceRows(a, rows) => {
                let c = self.values[a.0].cols();
                acc(*a, &mut |ga| axpy(1.0, gd, &mut ga[rows.start * c..rows.end * c]));
            }
            Op::Exp(a) => acc(*a, &mut |ga| {
                for ((o, g), y) in ga.iter_mut().zip(gd).zip(out.data()) {
                    *o += g * y;
                }
            }),
            Op::Log(a) => {
                let xa = self.values[a.0].data();
                acc(*a, &mut |ga| {
                    for ((o, g), x) in ga.iter_mut().zip(gd).zip(xa) {
                        *o += g / x;
                    }
                });
            }
            Op::Sigmoid(a) => acc(*a, &mut |ga| {
                for ((o, g), y) in ga.iter_mut().zip(gd).zip(out.data()) {
                    *o += g * y * (1.0 - y);
                }
            }),
            Op::Relu(a) => {
                let xa = self.values[a.0].data();
                acc(*a, &mut |ga| {
                    for ((o, g), x) in ga.iter_mut().zip(gd).zip(xa) {
                        if *x > 0.0 {
                            *o += g;
                        }
                    }
                });
            }
            Op::LeakyRelu(a, slope) => {
                let xa = self.values[a.0].data();
                acc(*a, &mut |ga| {
                    for ((o, g), x) in ga.iter_mut().zip(gd).zip(xa) {
                        *o += if *x > 0.0 { *g } else { slope * g };
                    }
                });
            }
            Op::Softplus(a) => {
                let xa = self.values[a.0].data();
                acc(*a, &mut |ga| {
                    for ((o, g), x) in ga.iter_mut().zip(gd).zip(xa) {
                        *o += g * sigmoid(*x);
                    }
                });
            }
            Op::BceWithLogits(a, y) => {
                let (xa, ya) = (self.values[a.0].data(), self.values[y.0].data());
                acc(*a, &mut |ga| {
                    for (((o, g), x), t) in ga.iter_mut().zip(gd).zip(xa).zip(ya) {
                        *o += g * (sigmoid(*x) - t);
                    }
                });
            }
            Op::Powf(a, p) => {
                let xa = self.values[a.0].data();
                acc(*a, &mut |ga| {
                    if *p == 0.0 {
                        return;
                    }
                    for ((o, g), x) in ga.iter_mut().zip(gd).zip(xa) {
                        *o += g * p * x.powf(p - 1.0);
                    }
                });
            }
            Op::GatherRows(a, index) => {
                let c = out.cols();
                acc(*a, &mut |ga| {
                    for (i, &src) in index.iter().enumerate() {
                        axpy(1.0, &gd[i * c..(i + 1) * c], &mut ga[src * c..(src + 1) * c]);
                    }
                });
            }
            Op::SegmentSum(a, ids) => {
                let c = out.cols();
                acc(*a, &mut |ga| {
                    for (i, &s) in ids.iter().enumerate() {
                        axpy(1.0, &gd[s * c..(s + 1) * c], &mut ga[i * c..(i + 1) * c]);
                    }
                });
            }
            Op::SegmentMean(a, ids, counts) => {
                let c = out.cols();
                acc(*a, &mut |ga| {
                    for (i, &s) in ids.iter().enumerate() {
                        let w = 1.0 / counts[s] as f64;
                        axpy(w, &gd[s * c..(s + 1) * c], &mut ga[i * c..(i + 1) * c]);
                    }
                });
            }
            Op::SegmentMax(a, arg) => {
                let c = out.cols();
                acc(*a, &mut |ga| {
                    for (p, k) in arg.iter().enumerate() {
                        if let Some(k) = k {
                            ga[k * c + p % c] += gd[p];
                        }
                    }
                });
            }
            Op::SegmentSoftmax(a, ids) => {
                let c = out.cols();
                let y = out.data();
                let segments = ids.iter().max().map_or(0, |m| m + 1);
                let mut inner = vec![0.0; segments * c];
                for (i, &s) in ids.iter().enumerate() {
                    for j in 0..c {
                        inner[s * c + j] += y[i * c + j] * gd[i * c + j];
                    }
                }
                acc(*a, &mut |ga| {
                    for (i, &s) in ids.iter().enumerate() {
                        for j in 0..c {
                            let p = i * c + j;
                            ga[p] += y[p] * (gd[p] - inner[s * c + j]);
                        }
                    }
                });
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                train,
            } => {
                let (r, c) = dims(out);
                let gam = self.values[gamma.0].data();
                let mut sum_g = vec![0.0; c];
                let mut sum_gx = vec![0.0; c];
                for i in 0..r {
                    for j in 0..c {
                        sum_g[j] += gd[i * c + j];
                        sum_gx[j] += gd[i * c + j] * xhat[i * c + j];
                    }
                }
                acc(*beta, &mut |gb| axpy(1.0, &sum_g, gb));
                acc(*gamma, &mut |gg| axpy(1.0, &sum_gx, gg));
                acc(*x, &mut |gx| {
                    let n = r as f64;
                    for i in 0..r {
                        for j in 0..c {
                            let p = i * c + j;
                            let scale = gam[j] * inv_std[j];
                            gx[p] += if *train {
                                scale * (gd[p] - sum_g[j] / n - xhat[p] * sum_gx[j] / n)
                            } else {
                                scale * gd[p]
                            };
                        }
                    }
                });
            }
            Op::Sum(a) => acc(*a, &mut |ga| ga.iter_mut().for_each(|o| *o += gd[0])),
            Op::Mean(a) => {
                let n = self.values[a.0].len().max(1) as f64;
                acc(*a, &mut |ga| ga.iter_mut().for_each(|o| *o += gd[0] / n));
            }
            Op::SumSquares(a) => {
                let xa = self.values[a.0].data();
                acc(*a, &mut |ga| {
                    for (o, x) in ga.iter_mut().zip(xa) {
                        *o += 2.0 * gd[0] * x;
                    }
                });
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (o, v) in y.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        let orow = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let x = a[i * k + p];
            if x != 0.0 {
                axpy(x, &b[p * m..(p + 1) * m], orow);
            }
        }
    }
}
