use crate::chem::{BondOrder, MolecularGraph};

/// Bond type one-hot (4), conjugated, ring, two endpoint degrees, three
/// bond-order fractions.
pub const BOND_DIM: usize = 11;

/// Features of one undirected bond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondFeatures {
    /// One-hot over single, double, triple, aromatic, then conjugated and ring flags.
    pub basic: [f64; 6],
    /// Endpoint degrees divided by 6, in endpoint order.
    pub degrees: (f64, f64),
    /// Fractions of single, double and triple bonds in the molecule.
    pub fractions: [f64; 3],
}

impl BondFeatures {
    /// The edge row in the stored direction, or with the endpoints swapped.
    pub fn row(&self, reversed: bool) -> [f64; BOND_DIM] {
        let mut out = [0.0; BOND_DIM];
        out[..6].copy_from_slice(&self.basic);
        let (a, b) = if reversed {
            (self.degrees.1, self.degrees.0)
        } else {
            self.degrees
        };
        out[6] = a;
        out[7] = b;
        out[8..].copy_from_slice(&self.fractions);
        out
    }
}

/// Per-molecule bond-order fractions. Aromatic bonds count toward the total
/// only, so the three values sum to 1 exactly when there are none.
pub fn bond_order_fractions(graph: &MolecularGraph) -> [f64; 3] {
    let total = graph.bond_count();
    if total == 0 {
        return [0.0; 3];
    }
    let mut counts = [0usize; 3];
    for b in graph.bonds() {
        match b.order {
            BondOrder::Single => counts[0] += 1,
            BondOrder::Double => counts[1] += 1,
            BondOrder::Triple => counts[2] += 1,
            BondOrder::Aromatic => {}
        }
    }
    counts.map(|c| c as f64 / total as f64)
}

fn scaled_degree(graph: &MolecularGraph, atom: usize) -> f64 {
    graph.degree(atom).min(6) as f64 / 6.0
}

pub fn bond_features(graph: &MolecularGraph, bond_index: usize) -> BondFeatures {
    bond_features_with(graph, bond_index, bond_order_fractions(graph))
}

pub(crate) fn bond_features_with(
    graph: &MolecularGraph,
    bond_index: usize,
    fractions: [f64; 3],
) -> BondFeatures {
    let bond = graph.bond(bond_index);
    let mut basic = [0.0; 6];
    basic[bond.order.index()] = 1.0;
    basic[4] = f64::from(u8::from(bond.conjugated));
    basic[5] = f64::from(u8::from(bond.in_ring));
    let (u, v) = bond.endpoints;
    BondFeatures {
        basic,
        degrees: (scaled_degree(graph, u), scaled_degree(graph, v)),
        fractions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn ethane() {
        let f = bond_features(&parse_smiles("CC").unwrap(), 0);
        assert_eq!(f.basic, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.degrees, (1.0 / 6.0, 1.0 / 6.0));
        assert_eq!(f.fractions, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn formaldehyde_and_benzene() {
        assert_eq!(bond_features(&parse_smiles("C=O").unwrap(), 0).fractions, [0.0, 1.0, 0.0]);
        let benzene = parse_smiles("c1ccccc1").unwrap();
        for b in 0..6 {
            let f = bond_features(&benzene, b);
            assert_eq!(f.fractions, [0.0, 0.0, 0.0]);
            assert_eq!(f.basic, [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn reversed_row_swaps_degrees_only() {
        let g = parse_smiles("CC(C)O").unwrap();
        let f = bond_features(&g, 0);
        let (fwd, rev) = (f.row(false), f.row(true));
        assert_eq!(fwd[6], rev[7]);
        assert_eq!(fwd[7], rev[6]);
        assert_ne!(fwd[6], fwd[7]);
        assert_eq!(fwd[..6], rev[..6]);
        assert_eq!(fwd[8..], rev[8..]);
    }
}
