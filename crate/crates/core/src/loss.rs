//! Binary cross-entropy, focal loss, their epoch-scheduled blend and the L2
//! weight penalty, all recorded on a [`Tape`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, TensorError};
use crate::tensor::{Tape, Tensor, Var};

/// Linear ramp of the focal-loss weight over training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Alpha1Schedule {
    pub start: f64,
    pub end: f64,
    /// Epochs over which the ramp runs; the whole epoch budget when absent.
    pub ramp_epochs: Option<usize>,
}

impl Default for Alpha1Schedule {
    fn default() -> Self {
        Alpha1Schedule {
            start: 0.1,
            end: 0.9,
            ramp_epochs: None,
        }
    }
}

impl Alpha1Schedule {
    /// Weight at 0-based `epoch` of a run lasting `total_epochs`. Held at
    /// `end` once the ramp is over.
    pub fn at(&self, epoch: usize, total_epochs: usize) -> f64 {
        let ramp = self.ramp_epochs.unwrap_or(total_epochs);
        if ramp == 0 {
            return self.end;
        }
        let t = (epoch as f64 / ramp as f64).min(1.0);
        self.start + (self.end - self.start) * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub alpha1_schedule: Alpha1Schedule,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 0.5,
            gamma: 2.0,
            lambda: 1e-5,
            alpha1_schedule: Alpha1Schedule::default(),
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let s = self.alpha1_schedule;
        if !((0.0..=1.0).contains(&s.start) && (0.0..=1.0).contains(&s.end) && s.start <= s.end) {
            return Err(Error::Config(
                "alpha1 schedule needs 0 <= start <= end <= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Elementwise cross-entropy in logit form,
/// `max(x, 0) - x·y + ln(1 + e^{-|x|})`.
pub fn bce(tape: &mut Tape, logits: Var, targets: Var) -> Result<Var, TensorError> {
    tape.bce_with_logits(logits, targets)
}

/// Elementwise focal loss `α (1 - p_t)^γ · bce`, with `1 - p_t = σ(-(2y-1)x)`.
pub fn focal(tape: &mut Tape, logits: Var, targets: Var, alpha: f64, gamma: f64) -> Result<Var, TensorError> {
    let signs = tape.value(targets).map(|y| 1.0 - 2.0 * y);
    let signs = tape.constant(signs);
    let flipped = tape.mul(logits, signs)?;
    let miss = tape.sigmoid(flipped);
    let weight = tape.powf(miss, gamma);
    let base = bce(tape, logits, targets)?;
    let weighted = tape.mul(weight, base)?;
    Ok(tape.scale(weighted, alpha))
}

/// Mean over all elements of `α₁·focal + (1 - α₁)·bce`.
pub fn adaptive_loss(
    tape: &mut Tape,
    logits: Var,
    targets: Var,
    alpha1: f64,
    config: &LossConfig,
) -> Result<Var, TensorError> {
    let f = focal(tape, logits, targets, config.alpha, config.gamma)?;
    let b = bce(tape, logits, targets)?;
    let f = tape.scale(f, alpha1);
    let b = tape.scale(b, 1.0 - alpha1);
    let blend = tape.add(f, b)?;
    Ok(tape.mean(blend))
}

/// `λ · Σ w²` over the given weight matrices.
pub fn l2_penalty(tape: &mut Tape, weights: &[Var], lambda: f64) -> Result<Var, TensorError> {
    let mut total = tape.constant(Tensor::scalar(0.0));
    for &w in weights {
        let s = tape.sum_squares(w);
        total = tape.add(total, s)?;
    }
    Ok(tape.scale(total, lambda))
}

/// Scalar cross-entropy for one logit and a 0/1 target.
pub fn bce_value(x: f64, y: f64) -> f64 {
    x.max(0.0) - x * y + (-x.abs()).exp().ln_1p()
}

/// Scalar focal loss for one logit and a 0/1 target.
pub fn focal_value(x: f64, y: f64, alpha: f64, gamma: f64) -> f64 {
    let z = (1.0 - 2.0 * y) * x;
    let miss = 1.0 / (1.0 + (-z).exp());
    alpha * miss.powf(gamma) * bce_value(x, y)
}
