use std::sync::{Arc, OnceLock};

use odorgat::chem::{parse_smiles, BondOrder, Element, MolecularGraph};
use odorgat::data::{read_dataset, split_indices, LabelPolicy};
use odorgat::featurize::{bond_order_fractions, functional_group_vector, FeatureConfig, Featurizer, PatternSet};
use odorgat::loss::{bce, bce_value, focal, focal_value};
use odorgat::metrics::auroc;
use odorgat::tensor::{Tape, Tensor};
use proptest::prelude::*;

fn featurizer() -> &'static Featurizer {
    static F: OnceLock<Featurizer> = OnceLock::new();
    F.get_or_init(|| Featurizer::new(FeatureConfig::default()).unwrap())
}

const RING_STARTS: [&str; 5] = ["", "c1ccccc1", "c1ccncc1", "C1CCCCC1", "c1ccoc1"];
const FRAGMENTS: [&str; 18] = [
    "O", "N", "S", "F", "Cl", "Br", "I", "C=O", "C(=O)O", "C(=O)OC", "OC", "C#N", "C=C", "C#C", "SC", "N(C)C",
    "C(=O)N", "[N+](=O)[O-]",
];

fn smiles() -> impl Strategy<Value = String> {
    (
        prop::sample::select(&RING_STARTS[..]),
        prop::collection::vec((any::<bool>(), prop::sample::select(&FRAGMENTS[..])), 1..6),
        prop::option::of(prop::sample::select(&FRAGMENTS[..])),
    )
        .prop_map(|(start, chain, tail)| {
            let mut s = start.to_string();
            for (branch, frag) in chain {
                s.push('C');
                if branch {
                    s.push('(');
                    s.push_str(frag);
                    s.push(')');
                }
            }
            if let Some(t) = tail {
                s.push_str(t);
            }
            s
        })
}

fn molecule_and_perm() -> impl Strategy<Value = (MolecularGraph, Vec<usize>)> {
    smiles().prop_flat_map(|s| {
        let g = parse_smiles(&s).unwrap();
        let n = g.atom_count();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn connectivity(g: &MolecularGraph, a: usize) -> usize {
    g.degree(a) + g.atom(a).implicit_h_count as usize
}

fn has_bond(g: &MolecularGraph, order: BondOrder, left: impl Fn(usize) -> bool, right: impl Fn(usize) -> bool) -> bool {
    g.bonds().iter().any(|b| {
        let (u, v) = b.endpoints;
        b.order == order && ((left(u) && right(v)) || (left(v) && right(u)))
    })
}

fn present(g: &MolecularGraph, name: &str) -> bool {
    let patterns = PatternSet::builtin();
    let v = functional_group_vector(g, patterns);
    let i = patterns.names().position(|n| n == name).unwrap();
    v[i] > 0.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_smiles_parse(s in smiles()) {
        let g = parse_smiles(&s).unwrap();
        prop_assert!(g.atom_count() > 0);
        prop_assert_eq!(g.rings().len(), g.bond_count() + g.component_count() - g.atom_count());
    }

    #[test]
    fn molecule_features_ignore_atom_order((g, perm) in molecule_and_perm()) {
        let f = featurizer();
        let h = g.permuted(&perm);
        let a = f.featurize(&g);
        let b = f.featurize(&h);
        prop_assert_eq!(&a.global_vector, &b.global_vector);
        for (old, &new) in perm.iter().enumerate() {
            prop_assert_eq!(a.node_matrix.row(old), b.node_matrix.row(new));
        }
        prop_assert_eq!(a.edge_count(), b.edge_count());
    }

    #[test]
    fn bond_order_fractions_are_shares(s in smiles()) {
        let g = parse_smiles(&s).unwrap();
        let f = bond_order_fractions(&g);
        let sum: f64 = f.iter().sum();
        let aromatic = g.bonds().iter().any(|b| b.order == BondOrder::Aromatic);
        prop_assert!(f.iter().all(|&x| (0.0..=1.0).contains(&x)));
        if g.bond_count() == 0 {
            prop_assert_eq!(sum, 0.0);
        } else if aromatic {
            prop_assert!(sum < 1.0);
        } else {
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn functional_groups_match_direct_definitions(s in smiles()) {
        let g = parse_smiles(&s).unwrap();
        let is = |a: usize, e: Element| g.atom(a).element == e;
        let x = |a: usize| connectivity(&g, a);
        let atoms = 0..g.atom_count();

        let hydroxyl = atoms.clone().any(|a| is(a, Element::O) && x(a) == 2 && g.total_h(a) == 1);
        prop_assert_eq!(present(&g, "hydroxyl"), hydroxyl, "hydroxyl in {}", s);

        let thiol = atoms.clone().any(|a| is(a, Element::S) && x(a) == 2 && g.total_h(a) == 1);
        prop_assert_eq!(present(&g, "thiol"), thiol, "thiol in {}", s);

        let carbonyl = has_bond(&g, BondOrder::Double, |a| is(a, Element::C) && x(a) == 3, |a| is(a, Element::O) && x(a) == 1);
        prop_assert_eq!(present(&g, "carbonyl"), carbonyl, "carbonyl in {}", s);

        let nitrile = has_bond(&g, BondOrder::Triple, |a| is(a, Element::N) && x(a) == 1, |a| is(a, Element::C) && x(a) == 2);
        prop_assert_eq!(present(&g, "nitrile"), nitrile, "nitrile in {}", s);

        let c3 = |a: usize| is(a, Element::C) && x(a) == 3;
        prop_assert_eq!(present(&g, "alkene"), has_bond(&g, BondOrder::Double, c3, c3), "alkene in {}", s);

        let aromatic = atoms.clone().any(|a| g.atom(a).aromatic);
        prop_assert_eq!(present(&g, "aromatic_ring"), aromatic, "aromatic in {}", s);

        let halogen = atoms.clone().any(|a| !matches!(
            g.atom(a).element,
            Element::H | Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        ));
        prop_assert_eq!(present(&g, "halogen"), halogen, "halogen in {}", s);
    }
}

proptest! {
    #[test]
    fn focal_is_bounded_by_weighted_bce(
        pairs in prop::collection::vec((-40.0f64..40.0, any::<bool>()), 1..40),
        alpha in 0.0f64..=1.0,
        gamma in 0.0f64..5.0,
    ) {
        let n = pairs.len();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::matrix(1, n, pairs.iter().map(|p| p.0).collect()));
        let y = tape.constant(Tensor::matrix(1, n, pairs.iter().map(|p| p.1 as u8 as f64).collect()));
        let f = focal(&mut tape, x, y, alpha, gamma).unwrap();
        let b = bce(&mut tape, x, y).unwrap();
        for (i, &(xi, yi)) in pairs.iter().enumerate() {
            let (fv, bv) = (tape.value(f).data()[i], tape.value(b).data()[i]);
            prop_assert!(fv >= 0.0 && fv <= alpha * bv + 1e-15);
            prop_assert!((fv - focal_value(xi, yi as u8 as f64, alpha, gamma)).abs() <= 1e-12);
            prop_assert_eq!(focal_value(xi, yi as u8 as f64, 1.0, 0.0), bce_value(xi, yi as u8 as f64));
        }
    }

    #[test]
    fn auroc_counts_ordered_pairs(
        items in prop::collection::vec((0u8..6, any::<bool>()), 0..50),
    ) {
        let scores: Vec<f64> = items.iter().map(|p| p.0 as f64 / 5.0).collect();
        let labels: Vec<bool> = items.iter().map(|p| p.1).collect();
        let mut wins = 0.0;
        let mut pairs = 0u32;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1;
                    wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        let expected = (pairs > 0).then(|| wins / pairs as f64);
        prop_assert_eq!(auroc(&scores, &labels), expected);
        let stretched: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 1.0).collect();
        prop_assert_eq!(auroc(&stretched, &labels), expected);
    }

    #[test]
    fn segment_softmax_sums_to_one(
        rows in prop::collection::vec((0usize..4, -50.0f64..50.0), 1..30),
    ) {
        let ids: Arc<[usize]> = rows.iter().map(|r| r.0).collect::<Vec<_>>().into();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::column(rows.iter().map(|r| r.1).collect()));
        let s = tape.segment_softmax(x, &ids, 4).unwrap();
        let mut sums = [0.0; 4];
        for (i, &g) in ids.iter().enumerate() {
            sums[g] += tape.value(s).data()[i];
        }
        for g in 0..4 {
            if ids.contains(&g) {
                prop_assert!((sums[g] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn split_is_a_partition(n in 2usize..300, fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let (train, test) = split_indices(n, fraction, seed).unwrap();
        prop_assert!(!train.is_empty() && !test.is_empty());
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(split_indices(n, fraction, seed).unwrap(), (train, test));
    }

    #[test]
    fn every_dataset_row_is_kept_or_rejected(
        rows in prop::collection::vec((prop::sample::select(&["CCO", "c1ccccc1", "C1CC", "Xy", "CC(=O)O", ""][..]), 0usize..3), 0..25),
    ) {
        let mut text = String::from("smiles,labels\n");
        for (s, labels) in &rows {
            let l: Vec<String> = (0..*labels).map(|i| format!("d{i}")).collect();
            text.push_str(&format!("{s},{}\n", l.join(";")));
        }
        let ds = read_dataset(text.as_bytes(), LabelPolicy::Required, odorgat::chem::ElementTable::builtin()).unwrap();
        prop_assert_eq!(ds.records.len() + ds.rejections.len(), ds.total_rows);
        prop_assert_eq!(ds.total_rows, rows.len());
        prop_assert!(ds.records.iter().all(|r| !r.labels.is_empty()));
    }
}
