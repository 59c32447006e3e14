//! Dense `f64` tensors, a reverse-mode tape, a finite-difference gradient
//! checker and the Adam optimizer.

mod adam;
mod array;
mod check;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use array::Tensor;
pub use check::{grad_check, grad_check_at, relative_error, GradCheck};
pub use tape::{BatchStats, Tape, Var};
