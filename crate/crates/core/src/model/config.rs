use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::featurize::{Featurizer, BOND_DIM};

/// Network shape and input widths.
///
/// Three attention layers: two with `heads` heads of `hidden_width` each, then
/// one single-head layer of `final_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub node_dim: usize,
    pub edge_dim: usize,
    pub global_dim: usize,
    pub label_count: usize,
    pub heads: usize,
    pub hidden_width: usize,
    pub final_width: usize,
    pub global_hidden: usize,
    pub global_out: usize,
    pub fusion_hidden: usize,
    pub leaky_slope: f64,
    /// Inverted-dropout rate after each attention layer and the fusion hidden
    /// layer, training only.
    pub dropout: f64,
    pub batch_norm_eps: f64,
    pub batch_norm_momentum: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            node_dim: 49,
            edge_dim: BOND_DIM,
            global_dim: 4262,
            label_count: 154,
            heads: 4,
            hidden_width: 64,
            final_width: 128,
            global_hidden: 256,
            global_out: 128,
            fusion_hidden: 256,
            leaky_slope: 0.2,
            dropout: 0.0,
            batch_norm_eps: 1e-5,
            batch_norm_momentum: 0.1,
        }
    }
}

/// Heads and per-head width of one attention layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub input: usize,
    pub heads: usize,
    pub width: usize,
}

impl LayerShape {
    pub fn output(&self) -> usize {
        self.heads * self.width
    }
}

impl ModelConfig {
    pub fn layers(&self) -> [LayerShape; 3] {
        let hidden = self.heads * self.hidden_width;
        [
            LayerShape {
                input: self.node_dim,
                heads: self.heads,
                width: self.hidden_width,
            },
            LayerShape {
                input: hidden,
                heads: self.heads,
                width: self.hidden_width,
            },
            LayerShape {
                input: hidden,
                heads: 1,
                width: self.final_width,
            },
        ]
    }

    /// Width of the fused readout: attention, mean and max pools plus the
    /// global branch.
    pub fn fusion_input(&self) -> usize {
        3 * self.final_width + self.global_out
    }

    /// Copies the input widths from a featurizer.
    pub fn with_inputs(mut self, featurizer: &Featurizer) -> ModelConfig {
        self.node_dim = featurizer.node_dim();
        self.edge_dim = featurizer.edge_dim();
        self.global_dim = featurizer.global_dim();
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        let positive = [
            ("node_dim", self.node_dim),
            ("edge_dim", self.edge_dim),
            ("global_dim", self.global_dim),
            ("label_count", self.label_count),
            ("heads", self.heads),
            ("hidden_width", self.hidden_width),
            ("final_width", self.final_width),
            ("global_hidden", self.global_hidden),
            ("global_out", self.global_out),
            ("fusion_hidden", self.fusion_hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("model {name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        if !(self.batch_norm_eps > 0.0) || !(0.0..=1.0).contains(&self.batch_norm_momentum) {
            return Err(Error::Config("batch norm needs eps > 0 and momentum in [0, 1]".into()));
        }
        if !self.leaky_slope.is_finite() {
            return Err(Error::Config("leaky_slope must be finite".into()));
        }
        Ok(())
    }

    /// Fails when the featurizer produces widths this model does not take.
    pub fn check_inputs(&self, featurizer: &Featurizer) -> Result<(), Error> {
        let pairs = [
            ("node", self.node_dim, featurizer.node_dim()),
            ("edge", self.edge_dim, featurizer.edge_dim()),
            ("global", self.global_dim, featurizer.global_dim()),
        ];
        for (what, model, features) in pairs {
            if model != features {
                return Err(Error::Config(format!(
                    "dimension mismatch: model expects {what} width {model}, features have {features}"
                )));
            }
        }
        Ok(())
    }
}
