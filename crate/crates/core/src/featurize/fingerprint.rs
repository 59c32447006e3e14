//! Hashed circular and path-distance fingerprints.
//!
//! Both fingerprints hash integer tuples with 64-bit FNV-1a over the
//! little-endian bytes of each word, starting from the FNV offset basis XORed
//! with [`HASH_SEED`], followed by the SplitMix64 finalizer so that the low
//! bits used by `mod bits` are well mixed. The output is identical on every
//! platform.

use crate::chem::{shortest_paths, MolecularGraph};

pub const HASH_SEED: u64 = 0x4f44_4f52_4741_5401;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Seeded hash of a sequence of 64-bit words.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET ^ HASH_SEED;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn set_bit(out: &mut [f64], hash: u64) {
    let len = out.len() as u64;
    out[(hash % len) as usize] = 1.0;
}

/// Per-atom invariants after each Morgan round, round 0 first.
pub fn morgan_invariants(graph: &MolecularGraph, radius: u32) -> Vec<Vec<u64>> {
    let n = graph.atom_count();
    let initial: Vec<u64> = (0..n)
        .map(|i| {
            let a = graph.atom(i);
            hash_words(&[
                u64::from(a.element.atomic_number()),
                graph.degree(i) as u64,
                a.formal_charge as i64 as u64,
                u64::from(a.implicit_h_count),
                u64::from(a.in_ring),
                u64::from(a.aromatic),
            ])
        })
        .collect();
    let mut rounds = vec![initial];
    for r in 1..=radius {
        let prev = rounds.last().expect("round 0 present");
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut pairs: Vec<(u64, u64)> = graph
                    .neighbors(i)
                    .map(|(b, nb)| (graph.bond(b).order.index() as u64, prev[nb]))
                    .collect();
                pairs.sort_unstable();
                let mut words = Vec::with_capacity(2 + 2 * pairs.len());
                words.push(u64::from(r));
                words.push(prev[i]);
                for (order, inv) in pairs {
                    words.push(order);
                    words.push(inv);
                }
                hash_words(&words)
            })
            .collect();
        rounds.push(next);
    }
    rounds
}

/// ECFP-style circular fingerprint. Every invariant from every round, the
/// initial one included, sets bit `invariant mod bits`.
pub fn morgan_fingerprint(graph: &MolecularGraph, radius: u32, bits: usize) -> Vec<f64> {
    let mut out = vec![0.0; bits];
    for round in morgan_invariants(graph, radius) {
        for inv in round {
            set_bit(&mut out, inv);
        }
    }
    out
}

/// Sets one bit per atom pair at finite distance `d ≥ 1`, hashed from the
/// sorted pair of atomic numbers and `d`.
pub fn topological_fingerprint(graph: &MolecularGraph, bits: usize) -> Vec<f64> {
    let mut out = vec![0.0; bits];
    let dist = shortest_paths(graph);
    let z: Vec<u64> = graph
        .atoms()
        .iter()
        .map(|a| u64::from(a.element.atomic_number()))
        .collect();
    for i in 0..dist.len() {
        for j in i + 1..dist.len() {
            let d = dist[i][j];
            if d >= 1 {
                let (lo, hi) = if z[i] <= z[j] { (z[i], z[j]) } else { (z[j], z[i]) };
                set_bit(&mut out, hash_words(&[lo, hi, d as u64]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn ones(v: &[f64]) -> usize {
        v.iter().filter(|&&x| x == 1.0).count()
    }

    #[test]
    fn hash_is_pinned() {
        // Values from an independent Python evaluation of the same recipe.
        assert_eq!(hash_words(&[]), 0x0d9b_7a45_e0a3_91a2);
        assert_eq!(hash_words(&[6]), 0xbbb9_384c_b404_68c1);
        assert_eq!(hash_words(&[6, 8, 1]), 0x48ab_2eb8_87bd_117a);
        assert_ne!(hash_words(&[1, 2]), hash_words(&[2, 1]));
    }

    #[test]
    fn morgan_examples() {
        let a = morgan_fingerprint(&parse_smiles("OCC").unwrap(), 2, 2048);
        let b = morgan_fingerprint(&parse_smiles("CCO").unwrap(), 2, 2048);
        assert_eq!(a, b);
        let methane = morgan_fingerprint(&parse_smiles("C").unwrap(), 2, 2048);
        let ethane = morgan_fingerprint(&parse_smiles("CC").unwrap(), 2, 2048);
        assert_ne!(methane, ethane);
        assert_eq!(ones(&morgan_fingerprint(&parse_smiles("CC").unwrap(), 0, 2048)), 1);
    }

    #[test]
    fn topological_examples() {
        let cco = topological_fingerprint(&parse_smiles("CCO").unwrap(), 2048);
        assert!((1..=3).contains(&ones(&cco)));
        assert_eq!(ones(&topological_fingerprint(&parse_smiles("C").unwrap(), 2048)), 0);
        let benzene = parse_smiles("c1ccccc1").unwrap();
        let relabeled = benzene.permuted(&[3, 5, 0, 1, 4, 2]);
        assert_eq!(
            topological_fingerprint(&benzene, 2048),
            topological_fingerprint(&relabeled, 2048)
        );
    }

    #[test]
    fn fragments_pairs_skipped() {
        let joined = topological_fingerprint(&parse_smiles("C.C").unwrap(), 64);
        assert_eq!(ones(&joined), 0);
    }
}
