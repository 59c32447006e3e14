//! Per-label AUROC and thresholded F1 for multi-label predictions.

use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

/// Default decision threshold on probabilities. A probability equal to the
/// threshold counts as a positive prediction.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Integer pair counts behind an AUROC value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub tied: u64,
    pub positives: u64,
    pub negatives: u64,
}

impl PairCounts {
    /// `(concordant + tied / 2) / (P · N)` with a single rounding, or `None`
    /// without both classes.
    pub fn auroc(&self) -> Option<f64> {
        let pairs = self.positives * self.negatives;
        if pairs == 0 {
            return None;
        }
        Some((2 * self.concordant + self.tied) as f64 / (2 * pairs) as f64)
    }
}

/// Counts positive/negative pairs by sorting, in `O(n log n)`.
pub fn pair_counts(scores: &[f64], labels: &[bool]) -> PairCounts {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut counts = PairCounts {
        concordant: 0,
        tied: 0,
        positives: 0,
        negatives: 0,
    };
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]].total_cmp(&scores[order[i]]).is_eq() {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        counts.concordant += pos * counts.negatives;
        counts.tied += pos * neg;
        counts.positives += pos;
        counts.negatives += neg;
        i = j;
    }
    counts
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` when a class is missing.
///
/// # Panics
/// If the slices differ in length.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "auroc: scores and labels differ in length");
    pair_counts(scores, labels).auroc()
}

/// Confusion counts at a threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    /// Harmonic mean of precision and recall, 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if self.tp == 0 || denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

fn confusions(scores: &Tensor, labels: &Tensor, threshold: f64) -> Vec<Confusion> {
    assert_eq!(scores.shape(), labels.shape(), "f1: shapes differ");
    let cols = scores.cols();
    let mut out = vec![Confusion::default(); cols];
    for (k, (&s, &y)) in scores.data().iter().zip(labels.data()).enumerate() {
        let c = &mut out[k % cols];
        match (s >= threshold, y > 0.5) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    out
}

/// Unweighted mean of per-label F1 over labels with at least one positive;
/// 0 when there are none.
pub fn f1_macro(scores: &Tensor, labels: &Tensor, threshold: f64) -> f64 {
    let per = confusions(scores, labels, threshold);
    let evaluable: Vec<f64> = per.iter().filter(|c| c.tp + c.fn_ > 0).map(Confusion::f1).collect();
    if evaluable.is_empty() {
        0.0
    } else {
        evaluable.iter().sum::<f64>() / evaluable.len() as f64
    }
}

/// F1 of the pooled confusion counts over all labels.
pub fn f1_micro(scores: &Tensor, labels: &Tensor, threshold: f64) -> f64 {
    let total = confusions(scores, labels, threshold)
        .into_iter()
        .fold(Confusion::default(), |a, c| Confusion {
            tp: a.tp + c.tp,
            fp: a.fp + c.fp,
            fn_: a.fn_ + c.fn_,
        });
    total.f1()
}

/// Evaluation summary over a set of molecules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub labels: Vec<String>,
    /// `null` for labels lacking positives or negatives.
    pub per_label_auroc: Vec<Option<f64>>,
    /// Mean over labels with a defined AUROC.
    pub mean_auroc: Option<f64>,
    /// `null` for labels without positives.
    pub per_label_f1: Vec<Option<f64>>,
    pub macro_f1: f64,
    pub micro_f1: f64,
    /// Positive count per label.
    pub support: Vec<usize>,
    /// Labels left out of the AUROC mean.
    pub skipped_labels: Vec<String>,
    pub threshold: f64,
    pub samples: usize,
}

impl MetricReport {
    /// Builds the report from `samples × labels` probabilities and 0/1 targets.
    ///
    /// # Panics
    /// If the shapes differ or `labels` does not match the column count.
    pub fn compute(probabilities: &Tensor, targets: &Tensor, labels: &[String], threshold: f64) -> MetricReport {
        assert_eq!(probabilities.shape(), targets.shape(), "metric shapes differ");
        let cols = probabilities.cols();
        assert_eq!(labels.len(), cols, "label names do not match columns");
        let rows = probabilities.rows();
        let mut per_label_auroc = Vec::with_capacity(cols);
        let mut skipped = Vec::new();
        let mut support = Vec::with_capacity(cols);
        for j in 0..cols {
            let scores: Vec<f64> = (0..rows).map(|i| probabilities.get(i, j)).collect();
            let truth: Vec<bool> = (0..rows).map(|i| targets.get(i, j) > 0.5).collect();
            support.push(truth.iter().filter(|&&t| t).count());
            let a = auroc(&scores, &truth);
            if a.is_none() {
                skipped.push(labels[j].clone());
            }
            per_label_auroc.push(a);
        }
        let defined: Vec<f64> = per_label_auroc.iter().flatten().copied().collect();
        let mean_auroc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        let per_label_f1 = confusions(probabilities, targets, threshold)
            .iter()
            .map(|c| (c.tp + c.fn_ > 0).then(|| c.f1()))
            .collect();
        MetricReport {
            labels: labels.to_vec(),
            per_label_auroc,
            mean_auroc,
            per_label_f1,
            macro_f1: f1_macro(probabilities, targets, threshold),
            micro_f1: f1_micro(probabilities, targets, threshold),
            support,
            skipped_labels: skipped,
            threshold,
            samples: rows,
        }
    }

    /// One row in the layout of the published comparison table:
    /// `| method | AUROC | F1 score |`.
    pub fn table_row(&self, method: &str) -> String {
        let auroc = self.mean_auroc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        format!("| {method} | {auroc} | {:.4} |", self.macro_f1)
    }
}
