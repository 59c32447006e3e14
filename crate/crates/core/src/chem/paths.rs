use std::collections::VecDeque;

use super::graph::MolecularGraph;

/// Marks pairs of atoms in different fragments.
pub const DISCONNECTED: i32 = -1;

/// All-pairs bond-count distances as an `n × n` matrix, by breadth-first search
/// from every atom. Disconnected pairs hold [`DISCONNECTED`].
pub fn shortest_paths(graph: &MolecularGraph) -> Vec<Vec<i32>> {
    let n = graph.atom_count();
    let mut out = vec![vec![DISCONNECTED; n]; n];
    let mut queue = VecDeque::new();
    for (src, row) in out.iter_mut().enumerate() {
        row[src] = 0;
        queue.push_back(src);
        while let Some(a) = queue.pop_front() {
            let d = row[a];
            for (_, nb) in graph.neighbors(a) {
                if row[nb] == DISCONNECTED {
                    row[nb] = d + 1;
                    queue.push_back(nb);
                }
            }
        }
    }
    out
}
