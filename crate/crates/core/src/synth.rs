//! Random small molecules labeled by functional-group rules.
//!
//! Molecules are assembled from a short carbon chain, an optional phenyl end
//! and random substituents. Each label is the presence of one shipped
//! functional-group pattern, found by the same matcher the featurizer uses,
//! so the labels are an exact function of structure.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chem::{parse_smiles, MolecularGraph};
use crate::data::DatasetRecord;
use crate::featurize::{functional_group_vector, PatternSet};

/// Pattern names used as labels, in output order.
pub const SYNTHETIC_LABELS: [&str; 8] = [
    "hydroxyl",
    "carbonyl",
    "ester",
    "ether",
    "amine_primary",
    "halogen",
    "aromatic_ring",
    "alkene",
];

const SUBSTITUENTS: [&str; 14] = [
    "O", "N", "Cl", "Br", "F", "C(=O)O", "C(=O)OC", "OC", "OCC", "C=O", "C(=O)C", "C=C", "C#N", "S",
];

/// Labels of `graph` under the synthetic rules.
pub fn synthetic_labels(graph: &MolecularGraph) -> Vec<String> {
    let patterns = PatternSet::builtin();
    let present = functional_group_vector(graph, patterns);
    let found: Vec<&str> = patterns.names().zip(&present).filter(|(_, &p)| p > 0.0).map(|(n, _)| n).collect();
    SYNTHETIC_LABELS
        .iter()
        .filter(|name| found.contains(name))
        .map(|s| s.to_string())
        .collect()
}

fn random_smiles(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    if rng.gen_bool(0.35) {
        s.push_str("c1ccccc1");
    }
    let chain = rng.gen_range(1..=5);
    for i in 0..chain {
        s.push('C');
        let last = i + 1 == chain;
        if !last && rng.gen_bool(0.35) {
            let _ = write!(s, "({})", SUBSTITUENTS.choose(rng).expect("non-empty"));
        }
    }
    if rng.gen_bool(0.8) {
        s.push_str(SUBSTITUENTS.choose(rng).expect("non-empty"));
    }
    s
}

/// `n` distinct molecules, each with at least one label.
///
/// # Panics
/// If `n` exceeds the number of distinct molecules the generator can reach
/// (several thousand).
pub fn synthetic_records(n: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        assert!(attempts < 1000 * (n + 10), "synthetic generator exhausted");
        let smiles = random_smiles(&mut rng);
        if !seen.insert(smiles.clone()) {
            continue;
        }
        let graph = parse_smiles(&smiles).expect("generator emits valid SMILES");
        let labels = synthetic_labels(&graph);
        if labels.is_empty() {
            continue;
        }
        out.push(DatasetRecord {
            row: out.len() + 1,
            smiles,
            labels,
            graph,
        });
    }
    out
}

/// The records of [`synthetic_records`] as dataset CSV text.
pub fn synthetic_csv(n: usize, seed: u64) -> String {
    let mut s = String::from("smiles,labels\n");
    for r in synthetic_records(n, seed) {
        let _ = writeln!(s, "{},{}", r.smiles, r.labels.join(";"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_rules() {
        let l = |s: &str| synthetic_labels(&parse_smiles(s).unwrap());
        assert_eq!(l("CCO"), ["hydroxyl"]);
        assert_eq!(l("CC(=O)OC"), ["carbonyl", "ester", "ether"]);
        assert_eq!(l("c1ccccc1CCl"), ["halogen", "aromatic_ring"]);
        assert_eq!(l("C=CCN"), ["amine_primary", "alkene"]);
        assert_eq!(l("CCOC"), ["ether"]);
        assert!(l("CCC").is_empty());
    }

    #[test]
    fn generation_is_seeded_and_distinct() {
        let a = synthetic_records(200, 1);
        let b = synthetic_records(200, 1);
        assert_eq!(a.iter().map(|r| &r.smiles).collect::<Vec<_>>(), b.iter().map(|r| &r.smiles).collect::<Vec<_>>());
        let distinct: BTreeSet<_> = a.iter().map(|r| &r.smiles).collect();
        assert_eq!(distinct.len(), 200);
        for name in SYNTHETIC_LABELS {
            let support = a.iter().filter(|r| r.labels.iter().any(|l| l == name)).count();
            assert!(support >= 10, "{name}: {support}");
        }
        assert!(synthetic_csv(3, 1).starts_with("smiles,labels\n"));
    }
}
