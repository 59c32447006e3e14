use serde::{Deserialize, Serialize};

use super::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Position in the bond-type one-hot block.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Contribution to the valence sum. Aromatic bonds count as one here; the
    /// extra half bond is settled by kekulization.
    pub fn valence_contribution(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomNode {
    pub element: Element,
    pub formal_charge: i32,
    /// Hydrogens not present as graph nodes.
    pub implicit_h_count: u32,
    pub aromatic: bool,
    pub radical_electrons: u32,
    pub in_ring: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondEdge {
    pub endpoints: (usize, usize),
    pub order: BondOrder,
    pub conjugated: bool,
    pub in_ring: bool,
}

impl BondEdge {
    pub fn other(&self, atom: usize) -> usize {
        if self.endpoints.0 == atom {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

/// A parsed molecule: atoms as nodes, bonds as edges.
///
/// Values are immutable once built; ring membership, aromaticity and hydrogen
/// counts are settled by the parser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolecularGraph {
    atoms: Vec<AtomNode>,
    bonds: Vec<BondEdge>,
    adjacency: Vec<Vec<usize>>,
    rings: Vec<Vec<usize>>,
}

impl MolecularGraph {
    /// Assembles a graph from finished atoms and bonds, computing adjacency, the
    /// ring basis and the ring flags.
    pub(crate) fn assemble(mut atoms: Vec<AtomNode>, mut bonds: Vec<BondEdge>) -> MolecularGraph {
        let adjacency = build_adjacency(atoms.len(), &bonds);
        let rings = super::rings::minimum_cycle_basis(atoms.len(), &bonds, &adjacency);
        for a in atoms.iter_mut() {
            a.in_ring = false;
        }
        for b in bonds.iter_mut() {
            b.in_ring = false;
        }
        let mut graph = MolecularGraph {
            atoms,
            bonds,
            adjacency,
            rings,
        };
        let ring_bonds: Vec<usize> = graph
            .rings
            .iter()
            .flat_map(|ring| graph.ring_bond_indices(ring))
            .collect();
        for b in ring_bonds {
            let (u, v) = graph.bonds[b].endpoints;
            graph.bonds[b].in_ring = true;
            graph.atoms[u].in_ring = true;
            graph.atoms[v].in_ring = true;
        }
        graph
    }

    pub fn atoms(&self) -> &[AtomNode] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[BondEdge] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &AtomNode {
        &self.atoms[i]
    }

    pub fn bond(&self, b: usize) -> &BondEdge {
        &self.bonds[b]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Incident bond indices per atom.
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// The minimum cycle basis computed at construction.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// `(bond index, neighbor atom)` pairs around `atom`.
    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency[atom]
            .iter()
            .map(move |&b| (b, self.bonds[b].other(atom)))
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.neighbors(a).find(|&(_, n)| n == b).map(|(bond, _)| bond)
    }

    /// Implicit hydrogens plus explicit hydrogen neighbors.
    pub fn total_h(&self, atom: usize) -> u32 {
        let explicit = self
            .neighbors(atom)
            .filter(|&(_, n)| self.atoms[n].element == Element::H)
            .count() as u32;
        self.atoms[atom].implicit_h_count + explicit
    }

    /// Number of basis rings containing `atom`.
    pub fn ring_membership_count(&self, atom: usize) -> usize {
        self.rings.iter().filter(|r| r.contains(&atom)).count()
    }

    /// Connected component id per atom, numbered in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let n = self.atoms.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(a) = stack.pop() {
                for (_, nb) in self.neighbors(a) {
                    if comp[nb] == usize::MAX {
                        comp[nb] = next;
                        stack.push(nb);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    /// Bond indices along a ring given as a cyclic atom sequence.
    pub fn ring_bond_indices<'a>(&'a self, ring: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        (0..ring.len()).map(move |k| {
            let a = ring[k];
            let b = ring[(k + 1) % ring.len()];
            self.bond_between(a, b).expect("ring atoms are bonded")
        })
    }

    /// Relabels atoms so that old atom `i` becomes `perm[i]`. Bonds keep their
    /// order; endpoints are remapped.
    pub fn permuted(&self, perm: &[usize]) -> MolecularGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length");
        let mut atoms = self.atoms.clone();
        for (old, atom) in self.atoms.iter().enumerate() {
            atoms[perm[old]] = atom.clone();
        }
        let bonds: Vec<BondEdge> = self
            .bonds
            .iter()
            .map(|b| BondEdge {
                endpoints: (perm[b.endpoints.0], perm[b.endpoints.1]),
                ..b.clone()
            })
            .collect();
        let adjacency = build_adjacency(atoms.len(), &bonds);
        let rings = self
            .rings
            .iter()
            .map(|r| r.iter().map(|&a| perm[a]).collect())
            .collect();
        MolecularGraph {
            atoms,
            bonds,
            adjacency,
            rings,
        }
    }
}

fn build_adjacency(n: usize, bonds: &[BondEdge]) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); n];
    for (i, b) in bonds.iter().enumerate() {
        adjacency[b.endpoints.0].push(i);
        adjacency[b.endpoints.1].push(i);
    }
    adjacency
}
