//! Ring perception: a minimum cycle basis over the bond graph.
//!
//! Candidate cycles follow Horton: for every root `w` and bond `(u, v)`, the
//! cycle formed by the shortest paths `w..u`, `w..v` and the bond itself, kept
//! when the two paths meet only at `w`. Candidates are taken shortest first and
//! accepted when independent over GF(2) from the cycles already chosen.

use std::collections::{HashSet, VecDeque};

use super::graph::{BondEdge, MolecularGraph};

/// The minimum cycle basis of a parsed molecule.
pub fn find_rings(graph: &MolecularGraph) -> Vec<Vec<usize>> {
    graph.rings().to_vec()
}

/// Cyclomatic number: the size of any cycle basis.
pub fn cycle_rank(atoms: usize, bonds: usize, components: usize) -> usize {
    (bonds + components).saturating_sub(atoms)
}

pub(crate) fn minimum_cycle_basis(
    n: usize,
    bonds: &[BondEdge],
    adjacency: &[Vec<usize>],
) -> Vec<Vec<usize>> {
    let m = bonds.len();
    let target = cycle_rank(n, m, count_components(n, bonds, adjacency));
    if target == 0 {
        return Vec::new();
    }
    let words = m.div_ceil(64);

    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut candidates: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut dist = vec![usize::MAX; n];
    let mut parent_bond = vec![usize::MAX; n];
    let mut stamp = vec![0usize; n];
    let mut mark = 0usize;
    let mut queue = VecDeque::new();

    for root in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        parent_bond.iter_mut().for_each(|p| *p = usize::MAX);
        dist[root] = 0;
        queue.push_back(root);
        while let Some(a) = queue.pop_front() {
            for &b in &adjacency[a] {
                let nb = bonds[b].other(a);
                if dist[nb] == usize::MAX {
                    dist[nb] = dist[a] + 1;
                    parent_bond[nb] = b;
                    queue.push_back(nb);
                }
            }
        }

        for (e, bond) in bonds.iter().enumerate() {
            let (u, v) = bond.endpoints;
            if dist[u] == usize::MAX || parent_bond[u] == e || parent_bond[v] == e {
                continue;
            }
            // Mark the path root..u, then require root..v to avoid it.
            mark += 1;
            let mut x = u;
            while x != root {
                stamp[x] = mark;
                x = bonds[parent_bond[x]].other(x);
            }
            let mut disjoint = true;
            let mut x = v;
            while x != root {
                if stamp[x] == mark {
                    disjoint = false;
                    break;
                }
                x = bonds[parent_bond[x]].other(x);
            }
            if !disjoint {
                continue;
            }
            let mut bits = vec![0u64; words];
            set_bit(&mut bits, e);
            for start in [u, v] {
                let mut x = start;
                while x != root {
                    set_bit(&mut bits, parent_bond[x]);
                    x = bonds[parent_bond[x]].other(x);
                }
            }
            if seen.insert(bits.clone()) {
                candidates.push((dist[u] + dist[v] + 1, bits));
            }
        }
    }

    candidates.sort();

    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for (_, bits) in candidates {
        let mut reduced = bits.clone();
        for (pivot, row) in &basis {
            if get_bit(&reduced, *pivot) {
                reduced.iter_mut().zip(row).for_each(|(a, b)| *a ^= b);
            }
        }
        if let Some(pivot) = lowest_bit(&reduced) {
            basis.push((pivot, reduced));
            rings.push(edges_to_cycle(&bits, bonds, adjacency));
            if rings.len() == target {
                break;
            }
        }
    }
    rings
}

fn count_components(n: usize, bonds: &[BondEdge], adjacency: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(a) = stack.pop() {
            for &b in &adjacency[a] {
                let nb = bonds[b].other(a);
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    count
}

/// Orders the atoms of a simple cycle, starting from its lowest atom index and
/// stepping first to the lower-indexed neighbor.
fn edges_to_cycle(bits: &[u64], bonds: &[BondEdge], adjacency: &[Vec<usize>]) -> Vec<usize> {
    let in_cycle = |b: usize| get_bit(bits, b);
    let start = bonds
        .iter()
        .enumerate()
        .filter(|&(b, _)| in_cycle(b))
        .map(|(_, bond)| bond.endpoints.0.min(bond.endpoints.1))
        .min()
        .expect("cycle has bonds");
    let next_from = |a: usize, prev: Option<usize>| {
        adjacency[a]
            .iter()
            .filter(|&&b| in_cycle(b))
            .map(|&b| bonds[b].other(a))
            .filter(|&nb| Some(nb) != prev)
            .min()
    };
    let mut cycle = vec![start];
    let mut prev = None;
    let mut cur = start;
    while let Some(nb) = next_from(cur, prev) {
        if nb == start {
            break;
        }
        cycle.push(nb);
        prev = Some(cur);
        cur = nb;
    }
    cycle
}

fn set_bit(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn get_bit(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn lowest_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}
