use super::{Tape, Tensor, Var};
use crate::error::TensorError;

/// Outcome of comparing reverse-mode gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Largest `|a - b| / max(|a|, |b|, 1e-8)` over the checked coordinates.
    pub max_relative_error: f64,
    /// `(parameter, flat index)` where the maximum occurred.
    pub worst: Option<(usize, usize)>,
    pub coordinates: usize,
}

/// Relative error used by the checker.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn evaluate<F>(f: &F, params: &[Tensor]) -> Result<(Tape, Vec<Var>, Var), TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    Ok((tape, vars, loss))
}

/// Checks every coordinate of every parameter.
pub fn grad_check<F>(f: F, params: &[Tensor], h: f64) -> Result<GradCheck, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    let coords: Vec<(usize, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(p, t)| (0..t.len()).map(move |i| (p, i)))
        .collect();
    grad_check_at(f, params, h, &coords)
}

/// Checks only the listed `(parameter, flat index)` coordinates.
pub fn grad_check_at<F>(
    f: F,
    params: &[Tensor],
    h: f64,
    coords: &[(usize, usize)],
) -> Result<GradCheck, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    if !(h > 0.0) {
        return Err(TensorError::Invalid {
            op: "grad_check",
            message: format!("step must be positive, got {h}"),
        });
    }
    let (mut tape, vars, loss) = evaluate(&f, params)?;
    tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| tape.grad_or_zeros(v)).collect();
    drop(tape);

    let mut work = params.to_vec();
    let mut report = GradCheck {
        max_relative_error: 0.0,
        worst: None,
        coordinates: coords.len(),
    };
    for &(p, i) in coords {
        let original = work[p].data()[i];
        work[p].data_mut()[i] = original + h;
        let plus = value_of(&f, &work)?;
        work[p].data_mut()[i] = original - h;
        let minus = value_of(&f, &work)?;
        work[p].data_mut()[i] = original;
        let numeric = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[p].data()[i], numeric);
        if err > report.max_relative_error || report.worst.is_none() {
            report.max_relative_error = err.max(report.max_relative_error);
            report.worst = Some((p, i));
        }
    }
    Ok(report)
}

fn value_of<F>(f: &F, params: &[Tensor]) -> Result<f64, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    let (tape, _, loss) = evaluate(f, params)?;
    tape.value(loss)
        .item()
        .ok_or_else(|| TensorError::NonScalarLoss(tape.value(loss).shape().to_vec()))
}
