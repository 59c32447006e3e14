//! Focal and cross-entropy losses on imbalanced labels, and the ranking and
//! threshold metrics used for evaluation.

use odorgat::loss::{bce_value, focal_value, Alpha1Schedule};
use odorgat::metrics::{auroc, MetricReport};
use odorgat::tensor::Tensor;

fn main() {
    println!("{:>7} {:>10} {:>10}", "logit", "bce", "focal");
    for x in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        println!("{x:>7.1} {:>10.5} {:>10.5}", bce_value(x, 1.0), focal_value(x, 1.0, 0.5, 2.0));
    }
    let schedule = Alpha1Schedule::default();
    let ramp: Vec<String> = (0..=4).map(|e| format!("{:.2}", schedule.at(e * 25, 100))).collect();
    println!("focal weight over 100 epochs: {}", ramp.join(" "));

    let scores = [0.9, 0.8, 0.8, 0.3, 0.2];
    let labels = [true, false, true, false, false];
    println!("AUROC {:?}", auroc(&scores, &labels));

    let probs = Tensor::matrix(4, 2, vec![0.9, 0.2, 0.6, 0.7, 0.4, 0.1, 0.2, 0.8]);
    let targets = Tensor::matrix(4, 2, vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let report = MetricReport::compute(&probs, &targets, &["floral".into(), "woody".into()], 0.5);
    println!("{}", report.table_row("toy"));
    println!("micro F1 {:.4}", report.micro_f1);
}
