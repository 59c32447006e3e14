//! Aromaticity and conjugation.
//!
//! Rings written in lowercase are aromatic as written, provided a Kekulé
//! assignment of their double bonds exists. Rings written with explicit single
//! and double bonds are aromatic when every member contributes to the π system
//! and the π-electron count is 4n+2. Per-atom π contributions:
//!
//! | atom situation                                   | π electrons |
//! |--------------------------------------------------|-------------|
//! | double bond inside a ring                        | 1           |
//! | exocyclic double bond (e.g. ring C=O)            | 0           |
//! | N, P: no double bond, three connections or NH    | 2           |
//! | O, S: no double bond, neutral                    | 2           |
//! | C⁻ without double bond                           | 2           |
//! | C⁺ or neutral B without double bond              | 0           |
//! | anything else (sp3 carbon, triple bonds)         | not aromatic |

use super::element::Element;
use super::graph::{AtomNode, BondEdge, BondOrder};
use crate::error::ChemError;

/// Checks that the aromatic atoms needing a double bond can be paired up along
/// aromatic bonds (a perfect matching), i.e. that a Kekulé form exists.
pub(crate) fn check_kekulizable(
    atoms: &[AtomNode],
    bonds: &[BondEdge],
    adjacency: &[Vec<usize>],
    needs_double: &[bool],
) -> Result<(), ChemError> {
    let n = atoms.len();
    let partners: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            if !needs_double[a] {
                return Vec::new();
            }
            adjacency[a]
                .iter()
                .filter(|&&b| bonds[b].order == BondOrder::Aromatic)
                .map(|&b| bonds[b].other(a))
                .filter(|&nb| needs_double[nb])
                .collect()
        })
        .collect();
    let mut matched = vec![false; n];
    let pending: Vec<usize> = (0..n).filter(|&a| needs_double[a]).collect();
    if match_all(&pending, &partners, &mut matched) {
        Ok(())
    } else {
        let atom = pending
            .iter()
            .copied()
            .find(|&a| partners[a].is_empty())
            .or(pending.first().copied())
            .unwrap_or(0);
        Err(ChemError::Aromaticity {
            atom,
            message: "no Kekulé structure for the aromatic system".into(),
        })
    }
}

/// Backtracking perfect matching, always branching on the unmatched atom with
/// the fewest free partners.
fn match_all(pending: &[usize], partners: &[Vec<usize>], matched: &mut [bool]) -> bool {
    let mut best: Option<(usize, usize)> = None;
    for &a in pending {
        if matched[a] {
            continue;
        }
        let free = partners[a].iter().filter(|&&p| !matched[p]).count();
        if best.is_none_or(|(_, f)| free < f) {
            best = Some((a, free));
        }
    }
    let Some((a, free)) = best else {
        return true;
    };
    if free == 0 {
        return false;
    }
    matched[a] = true;
    for &p in &partners[a] {
        if matched[p] {
            continue;
        }
        matched[p] = true;
        if match_all(pending, partners, matched) {
            return true;
        }
        matched[p] = false;
    }
    matched[a] = false;
    false
}

fn pi_contribution(
    atom: usize,
    atoms: &[AtomNode],
    bonds: &[BondEdge],
    adjacency: &[Vec<usize>],
) -> Option<u32> {
    let a = &atoms[atom];
    let mut ring_double = false;
    let mut exo_double = false;
    for &b in &adjacency[atom] {
        match bonds[b].order {
            BondOrder::Triple => return None,
            BondOrder::Double if bonds[b].in_ring => ring_double = true,
            BondOrder::Double => exo_double = true,
            _ => {}
        }
    }
    if ring_double {
        return Some(1);
    }
    if exo_double {
        return Some(0);
    }
    let connections = adjacency[atom].len() as u32 + a.implicit_h_count;
    match (a.element, a.formal_charge) {
        (Element::N | Element::P, 0) if connections == 3 => Some(2),
        (Element::O | Element::S, 0) => Some(2),
        (Element::C, -1) => Some(2),
        (Element::C, 1) | (Element::B, 0) => Some(0),
        _ => None,
    }
}

/// Applies the Hückel rule to basis rings written without aromatic atoms.
pub(crate) fn perceive_kekule_rings(
    atoms: &mut [AtomNode],
    bonds: &mut [BondEdge],
    adjacency: &[Vec<usize>],
    rings: &[Vec<usize>],
) {
    let snapshot_bonds = bonds.to_vec();
    let snapshot_atoms = atoms.to_vec();
    for ring in rings {
        if ring.iter().any(|&a| snapshot_atoms[a].aromatic) {
            continue;
        }
        let total: Option<u32> = ring
            .iter()
            .map(|&a| pi_contribution(a, &snapshot_atoms, &snapshot_bonds, adjacency))
            .sum();
        let Some(pi) = total else { continue };
        if pi % 4 != 2 {
            continue;
        }
        for k in 0..ring.len() {
            let (u, v) = (ring[k], ring[(k + 1) % ring.len()]);
            atoms[u].aromatic = true;
            let b = adjacency[u]
                .iter()
                .copied()
                .find(|&b| bonds[b].other(u) == v)
                .expect("ring atoms are bonded");
            bonds[b].order = BondOrder::Aromatic;
        }
    }
}

/// Marks conjugated bonds: aromatic bonds, multiple bonds next to another
/// unsaturation or a lone-pair heteroatom, and single bonds joining two such
/// centers.
pub(crate) fn assign_conjugation(atoms: &[AtomNode], bonds: &mut [BondEdge], adjacency: &[Vec<usize>]) {
    let unsaturated: Vec<bool> = (0..atoms.len())
        .map(|a| adjacency[a].iter().any(|&b| bonds[b].order != BondOrder::Single))
        .collect();
    let lone_pair = |a: usize| {
        matches!(atoms[a].element, Element::N | Element::O | Element::S) && !unsaturated[a]
    };
    let single_conjugated: Vec<bool> = bonds
        .iter()
        .map(|b| {
            let (u, v) = b.endpoints;
            b.order == BondOrder::Single
                && ((unsaturated[u] && (unsaturated[v] || lone_pair(v)))
                    || (unsaturated[v] && lone_pair(u)))
        })
        .collect();
    let flags: Vec<bool> = bonds
        .iter()
        .enumerate()
        .map(|(i, b)| match b.order {
            BondOrder::Aromatic => true,
            BondOrder::Single => single_conjugated[i],
            BondOrder::Double | BondOrder::Triple => {
                let (u, v) = b.endpoints;
                [u, v]
                    .iter()
                    .any(|&x| adjacency[x].iter().any(|&o| o != i && single_conjugated[o]))
            }
        })
        .collect();
    for (b, f) in bonds.iter_mut().zip(flags) {
        b.conjugated = f;
    }
}
