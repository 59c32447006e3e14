use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::{Error, TensorError};
use crate::tensor::{BatchStats, Tape, Tensor, Var};

/// Role of a parameter array; decides initialization and the L2 penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// Dense weight matrix: Glorot-uniform, penalized.
    Weight,
    /// Attention vectors stored as columns: Glorot-uniform per column, penalized.
    Attention,
    /// Zero-initialized, not penalized.
    Bias,
    /// Batch-norm scale: ones, not penalized.
    NormScale,
    /// Batch-norm shift: zeros, not penalized.
    NormShift,
}

impl ParamKind {
    pub fn penalized(self) -> bool {
        matches!(self, ParamKind::Weight | ParamKind::Attention)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub kind: ParamKind,
}

/// Ordered parameter names and shapes for a [`ModelConfig`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub specs: Vec<ParamSpec>,
}

/// Indices into the layout for one attention layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlots {
    pub weight: usize,
    pub attention: usize,
    pub norm_scale: usize,
    pub norm_shift: usize,
}

/// Indices for the readout, global branch and output head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadSlots {
    pub readout: usize,
    pub global_w1: usize,
    pub global_b1: usize,
    pub global_w2: usize,
    pub global_b2: usize,
    pub fusion_w1: usize,
    pub fusion_b1: usize,
    pub fusion_w2: usize,
    pub fusion_b2: usize,
}

impl ParamLayout {
    pub fn new(config: &ModelConfig) -> ParamLayout {
        let mut specs = Vec::new();
        let mut add = |name: String, shape: [usize; 2], kind| {
            specs.push(ParamSpec {
                name,
                shape: shape.to_vec(),
                kind,
            })
        };
        for (l, layer) in config.layers().iter().enumerate() {
            let out = layer.output();
            add(format!("gat{l}.weight"), [layer.input, out], ParamKind::Weight);
            add(
                format!("gat{l}.attention"),
                [2 * layer.width + config.edge_dim, layer.heads],
                ParamKind::Attention,
            );
            add(format!("gat{l}.norm_scale"), [1, out], ParamKind::NormScale);
            add(format!("gat{l}.norm_shift"), [1, out], ParamKind::NormShift);
        }
        add("readout.attention".into(), [config.final_width, 1], ParamKind::Attention);
        add("global.w1".into(), [config.global_dim, config.global_hidden], ParamKind::Weight);
        add("global.b1".into(), [1, config.global_hidden], ParamKind::Bias);
        add("global.w2".into(), [config.global_hidden, config.global_out], ParamKind::Weight);
        add("global.b2".into(), [1, config.global_out], ParamKind::Bias);
        add("fusion.w1".into(), [config.fusion_input(), config.fusion_hidden], ParamKind::Weight);
        add("fusion.b1".into(), [1, config.fusion_hidden], ParamKind::Bias);
        add("fusion.w2".into(), [config.fusion_hidden, config.label_count], ParamKind::Weight);
        add("fusion.b2".into(), [1, config.label_count], ParamKind::Bias);
        ParamLayout { specs }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn layer(&self, l: usize) -> LayerSlots {
        let base = 4 * l;
        LayerSlots {
            weight: base,
            attention: base + 1,
            norm_scale: base + 2,
            norm_shift: base + 3,
        }
    }

    pub fn head(&self) -> HeadSlots {
        let base = 12;
        HeadSlots {
            readout: base,
            global_w1: base + 1,
            global_b1: base + 2,
            global_w2: base + 3,
            global_b2: base + 4,
            fusion_w1: base + 5,
            fusion_b1: base + 6,
            fusion_w2: base + 7,
            fusion_b2: base + 8,
        }
    }

    /// Total scalar count.
    pub fn size(&self) -> usize {
        self.specs.iter().map(|s| s.shape.iter().product::<usize>()).sum()
    }
}

/// Running batch-norm statistics of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    fn new(width: usize) -> RunningStats {
        RunningStats {
            mean: vec![0.0; width],
            var: vec![1.0; width],
        }
    }

    /// Exponential moving update. The batch variance is converted to its
    /// unbiased form before mixing.
    pub fn update(&mut self, batch: &BatchStats, momentum: f64) {
        let correction = if batch.count > 1 {
            batch.count as f64 / (batch.count - 1) as f64
        } else {
            1.0
        };
        for (r, b) in self.mean.iter_mut().zip(&batch.mean) {
            *r = (1.0 - momentum) * *r + momentum * b;
        }
        for (r, b) in self.var.iter_mut().zip(&batch.var) {
            *r = (1.0 - momentum) * *r + momentum * b * correction;
        }
    }
}

/// All learnable arrays plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub layout: ParamLayout,
    pub tensors: Vec<Tensor>,
    pub running: Vec<RunningStats>,
}

impl ModelParams {
    /// Seeded initialization: Glorot-uniform `±√(6 / (fan_in + fan_out))` for
    /// weights and attention columns, zeros for biases and shifts, ones for
    /// scales. Arrays are filled in layout order from one ChaCha8 stream.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<ModelParams, Error> {
        config.validate()?;
        let layout = ParamLayout::new(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = layout
            .specs
            .iter()
            .map(|spec| {
                let (rows, cols) = (spec.shape[0], spec.shape[1]);
                let n = rows * cols;
                let data = match spec.kind {
                    ParamKind::Weight => glorot(&mut rng, n, rows, cols),
                    ParamKind::Attention => glorot(&mut rng, n, rows, 1),
                    ParamKind::Bias | ParamKind::NormShift => vec![0.0; n],
                    ParamKind::NormScale => vec![1.0; n],
                };
                Tensor::matrix(rows, cols, data)
            })
            .collect();
        let running = config.layers().iter().map(|l| RunningStats::new(l.output())).collect();
        Ok(ModelParams {
            config: config.clone(),
            layout,
            tensors,
            running,
        })
    }

    /// Rebuilds from stored arrays, checking them against the layout.
    pub fn from_parts(config: ModelConfig, tensors: Vec<Tensor>, running: Vec<RunningStats>) -> Result<ModelParams, Error> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if tensors.len() != layout.len() {
            return Err(Error::Config(format!(
                "expected {} parameter arrays, got {}",
                layout.len(),
                tensors.len()
            )));
        }
        for (spec, t) in layout.specs.iter().zip(&tensors) {
            if t.shape() != spec.shape.as_slice() {
                return Err(TensorError::ShapeMismatch {
                    op: "load_params",
                    lhs: spec.shape.clone(),
                    rhs: t.shape().to_vec(),
                }
                .into());
            }
        }
        let widths: Vec<usize> = config.layers().iter().map(|l| l.output()).collect();
        if running.len() != widths.len()
            || running
                .iter()
                .zip(&widths)
                .any(|(r, &w)| r.mean.len() != w || r.var.len() != w)
        {
            return Err(Error::Config("batch-norm statistics do not match the layers".into()));
        }
        Ok(ModelParams {
            config,
            layout,
            tensors,
            running,
        })
    }

    /// Puts every array on `tape`, as trainable leaves or as constants.
    pub fn register(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.tensors
            .iter()
            .map(|t| {
                if trainable {
                    tape.param(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect()
    }

    /// Variables of the penalized arrays.
    pub fn penalized(&self, vars: &[Var]) -> Vec<Var> {
        self.layout
            .specs
            .iter()
            .zip(vars)
            .filter(|(s, _)| s.kind.penalized())
            .map(|(_, &v)| v)
            .collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.layout.names()
    }
}

fn glorot(rng: &mut ChaCha8Rng, n: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}
