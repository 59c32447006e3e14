//! Reverse-mode differentiation on the tape, checked against finite differences.

use odorgat::error::Result;
use odorgat::tensor::{grad_check, Tape, Tensor};

fn main() -> Result<()> {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.5]));
    let w = tape.param(Tensor::matrix(3, 1, vec![0.2, -0.3, 0.7]));
    let y = tape.matmul(x, w)?;
    let y = tape.sigmoid(y);
    let loss = tape.sum_squares(y);
    tape.backward(loss)?;
    println!("loss {:.6}", tape.value(loss).data()[0]);
    println!("dL/dw {:?}", tape.grad(w).map(|g| g.data().to_vec()));

    let params = [Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.5]), Tensor::matrix(3, 1, vec![0.2, -0.3, 0.7])];
    let report = grad_check(
        |t, v| {
            let y = t.matmul(v[0], v[1])?;
            let y = t.sigmoid(y);
            Ok(t.sum_squares(y))
        },
        &params,
        1e-5,
    )?;
    println!(
        "finite-difference check over {} coordinates: max relative error {:.2e}",
        report.coordinates, report.max_relative_error
    );
    Ok(())
}
