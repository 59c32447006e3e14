use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::batch::BatchGraph;
use super::config::{LayerShape, ModelConfig};
use super::params::ModelParams;
use crate::error::{Error, TensorError};
use crate::tensor::{BatchStats, Tape, Tensor, Var};

/// Batch-norm behavior for a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Normalize with batch statistics and report them.
    Train,
    /// Normalize with the stored running statistics.
    Infer,
}

/// Variables of one attention layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    pub weight: Var,
    pub attention: Var,
    pub norm_scale: Var,
    pub norm_shift: Var,
}

/// Normalization inputs for [`gat_layer`].
#[derive(Debug, Clone, Copy)]
pub enum Norm<'a> {
    Batch { eps: f64 },
    Running { mean: &'a [f64], var: &'a [f64], eps: f64 },
}

#[derive(Debug, Clone)]
pub struct LayerOutput {
    pub hidden: Var,
    /// `edges × heads` attention weights.
    pub attention: Var,
    pub stats: Option<BatchStats>,
}

/// One edge-aware attention layer.
///
/// Per head, edge `j → i` scores `leaky(a_dstᵀ W h_i + a_srcᵀ W h_j + a_edgeᵀ e_ij)`;
/// scores are normalized over the in-edges of each target `i`, messages
/// `α_ij W h_j` are summed at `i`, heads are concatenated, then batch norm and
/// relu follow. The attention array holds one column per head, rows ordered
/// target block, source block, edge block.
pub fn gat_layer(
    tape: &mut Tape,
    h: Var,
    batch: &BatchGraph,
    vars: LayerVars,
    shape: LayerShape,
    slope: f64,
    norm: Norm<'_>,
) -> Result<LayerOutput, TensorError> {
    let n = batch.node_count();
    let f = shape.width;
    let z = tape.matmul(h, vars.weight)?;
    let edge_dim = batch.edge_features.cols();
    let a_dst = tape.slice_rows(vars.attention, 0..f)?;
    let a_src = tape.slice_rows(vars.attention, f..2 * f)?;
    let a_edge = tape.slice_rows(vars.attention, 2 * f..2 * f + edge_dim)?;
    let e = tape.constant(batch.edge_features.clone());
    let edge_terms = tape.matmul(e, a_edge)?;
    let mut heads_z = Vec::with_capacity(shape.heads);
    let mut scores = Vec::with_capacity(shape.heads);
    for k in 0..shape.heads {
        let zk = tape.slice_cols(z, k * f..(k + 1) * f)?;
        let ad = tape.slice_cols(a_dst, k..k + 1)?;
        let asrc = tape.slice_cols(a_src, k..k + 1)?;
        let t = tape.matmul(zk, ad)?;
        let u = tape.matmul(zk, asrc)?;
        let t = tape.gather_rows(t, &batch.edge_dst)?;
        let u = tape.gather_rows(u, &batch.edge_src)?;
        let ek = tape.slice_cols(edge_terms, k..k + 1)?;
        let s = tape.add(t, u)?;
        scores.push(tape.add(s, ek)?);
        heads_z.push(zk);
    }
    let scores = tape.concat_cols(&scores)?;
    let scores = tape.leaky_relu(scores, slope);
    let alpha = tape.segment_softmax(scores, &batch.edge_dst, n)?;
    let mut outs = Vec::with_capacity(shape.heads);
    for (k, zk) in heads_z.into_iter().enumerate() {
        let msg = tape.gather_rows(zk, &batch.edge_src)?;
        let ak = tape.slice_cols(alpha, k..k + 1)?;
        let msg = tape.mul_column(msg, ak)?;
        outs.push(tape.segment_sum(msg, &batch.edge_dst, n)?);
    }
    let joined = if outs.len() == 1 { outs[0] } else { tape.concat_cols(&outs)? };
    let (normed, stats) = match norm {
        Norm::Batch { eps } => {
            let (v, s) = tape.batch_norm_train(joined, vars.norm_scale, vars.norm_shift, eps)?;
            (v, Some(s))
        }
        Norm::Running { mean, var, eps } => (
            tape.batch_norm_infer(joined, vars.norm_scale, vars.norm_shift, mean, var, eps)?,
            None,
        ),
    };
    Ok(LayerOutput {
        hidden: tape.relu(normed),
        attention: alpha,
        stats,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ReadoutOutput {
    /// `graphs × width` attention-pooled features.
    pub pooled: Var,
    /// `nodes × 1` per-graph attention weights.
    pub weights: Var,
}

/// Attention pooling: node scores `x_i · w`, softmax within each graph, then
/// the weighted sum of node rows per graph.
pub fn attention_readout(tape: &mut Tape, h: Var, batch: &BatchGraph, weight: Var) -> Result<ReadoutOutput, TensorError> {
    let scores = tape.matmul(h, weight)?;
    let weights = tape.segment_softmax(scores, &batch.graph_ids, batch.graph_count)?;
    let weighted = tape.mul_column(h, weights)?;
    let pooled = tape.segment_sum(weighted, &batch.graph_ids, batch.graph_count)?;
    Ok(ReadoutOutput { pooled, weights })
}

/// Everything a forward pass exposes.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// `graphs × labels`.
    pub logits: Var,
    /// Per layer, `edges × heads` neighborhood attention.
    pub layer_attention: Vec<Var>,
    /// `nodes × 1` readout attention.
    pub readout_attention: Var,
    /// Batch statistics per layer in training mode.
    pub batch_stats: Vec<BatchStats>,
}

fn dropout(tape: &mut Tape, x: Var, rate: f64, rng: Option<&mut ChaCha8Rng>) -> Var {
    let Some(rng) = rng else { return x };
    if rate <= 0.0 {
        return x;
    }
    let keep = 1.0 / (1.0 - rate);
    let shape = tape.value(x).shape().to_vec();
    let n = tape.value(x).len();
    let mask: Vec<f64> = (0..n).map(|_| if rng.gen_bool(rate) { 0.0 } else { keep }).collect();
    let mask = tape.constant(Tensor::matrix(shape[0], n / shape[0].max(1), mask));
    tape.mul(x, mask).expect("mask shaped like input")
}

fn check_batch(config: &ModelConfig, batch: &BatchGraph) -> Result<(), Error> {
    let pairs = [
        ("node", config.node_dim, batch.node_features.cols()),
        ("edge", config.edge_dim, batch.edge_features.cols()),
        ("global", config.global_dim, batch.global_features.cols()),
    ];
    for (what, model, features) in pairs {
        if model != features {
            return Err(Error::Config(format!(
                "dimension mismatch: model expects {what} width {model}, batch has {features}"
            )));
        }
    }
    Ok(())
}

/// Full network on `batch` with parameter variables `vars` (from
/// [`ModelParams::register`]). `rng` enables dropout in training mode.
pub fn forward(
    tape: &mut Tape,
    params: &ModelParams,
    vars: &[Var],
    batch: &BatchGraph,
    mode: Mode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardOutput, Error> {
    let config = &params.config;
    check_batch(config, batch)?;
    let layout = &params.layout;
    let mut h = tape.constant(batch.node_features.clone());
    let mut layer_attention = Vec::new();
    let mut batch_stats = Vec::new();
    for (l, shape) in config.layers().into_iter().enumerate() {
        let slots = layout.layer(l);
        let lv = LayerVars {
            weight: vars[slots.weight],
            attention: vars[slots.attention],
            norm_scale: vars[slots.norm_scale],
            norm_shift: vars[slots.norm_shift],
        };
        let norm = match mode {
            Mode::Train => Norm::Batch {
                eps: config.batch_norm_eps,
            },
            Mode::Infer => Norm::Running {
                mean: &params.running[l].mean,
                var: &params.running[l].var,
                eps: config.batch_norm_eps,
            },
        };
        let out = gat_layer(tape, h, batch, lv, shape, config.leaky_slope, norm)?;
        h = if mode == Mode::Train {
            dropout(tape, out.hidden, config.dropout, rng.as_deref_mut())
        } else {
            out.hidden
        };
        layer_attention.push(out.attention);
        batch_stats.extend(out.stats);
    }
    let slots = layout.head();
    let readout = attention_readout(tape, h, batch, vars[slots.readout])?;
    let mean = tape.segment_mean(h, &batch.graph_ids, batch.graph_count)?;
    let max = tape.segment_max(h, &batch.graph_ids, batch.graph_count)?;
    let g = tape.constant(batch.global_features.clone());
    let g = dense(tape, g, vars[slots.global_w1], vars[slots.global_b1])?;
    let g = tape.relu(g);
    let g = dense(tape, g, vars[slots.global_w2], vars[slots.global_b2])?;
    let g = tape.relu(g);
    let fused = tape.concat_cols(&[readout.pooled, mean, max, g])?;
    let hidden = dense(tape, fused, vars[slots.fusion_w1], vars[slots.fusion_b1])?;
    let hidden = tape.relu(hidden);
    let hidden = if mode == Mode::Train {
        dropout(tape, hidden, config.dropout, rng.as_deref_mut())
    } else {
        hidden
    };
    let logits = dense(tape, hidden, vars[slots.fusion_w2], vars[slots.fusion_b2])?;
    Ok(ForwardOutput {
        logits,
        layer_attention,
        readout_attention: readout.weights,
        batch_stats,
    })
}

fn dense(tape: &mut Tape, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
    let y = tape.matmul(x, w)?;
    tape.add_row(y, b)
}

/// Inference-mode logits without gradient bookkeeping.
pub fn predict_logits(params: &ModelParams, batch: &BatchGraph) -> Result<Tensor, Error> {
    let mut tape = Tape::new();
    let vars = params.register(&mut tape, false);
    let out = forward(&mut tape, params, &vars, batch, Mode::Infer, None)?;
    Ok(tape.value(out.logits).clone())
}

/// Elementwise logistic function of a logit matrix.
pub fn probabilities(logits: &Tensor) -> Tensor {
    logits.map(|x| {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    })
}

