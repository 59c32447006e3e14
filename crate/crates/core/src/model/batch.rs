use std::sync::Arc;

use crate::error::Error;
use crate::featurize::FeatureSet;
use crate::tensor::Tensor;

/// Several molecules packed into one disconnected graph.
///
/// Each node also gets a self-edge with an all-zero feature row, appended
/// after the bond edges, so every neighborhood contains the node itself.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGraph {
    pub node_features: Tensor,
    pub edge_src: Arc<[usize]>,
    pub edge_dst: Arc<[usize]>,
    pub edge_features: Tensor,
    /// Molecule index of each node.
    pub graph_ids: Arc<[usize]>,
    pub graph_count: usize,
    pub global_features: Tensor,
    pub labels: Option<Tensor>,
    /// Number of leading edges that come from bonds.
    pub bond_edges: usize,
}

impl BatchGraph {
    /// Packs feature sets. Labels are kept only if every set has them.
    pub fn from_features(sets: &[&FeatureSet]) -> Result<BatchGraph, Error> {
        let Some(first) = sets.first() else {
            return Err(Error::Config("cannot batch zero molecules".into()));
        };
        let node_dim = first.node_matrix.cols();
        let edge_dim = first.edge_matrix.cols();
        let global_dim = first.global_vector.len();
        let label_dim = first.label_vector.as_ref().map(Vec::len);
        let mut nodes = Vec::new();
        let mut src = Vec::new();
        let mut dst = Vec::new();
        let mut edges = Vec::new();
        let mut ids = Vec::new();
        let mut globals = Vec::with_capacity(sets.len() * global_dim);
        let mut labels = Vec::new();
        let mut keep_labels = label_dim.is_some();
        let mut offset = 0;
        for (g, set) in sets.iter().enumerate() {
            let n = set.atom_count();
            if n == 0 {
                return Err(Error::Config(format!("molecule {g} in batch has no atoms")));
            }
            if set.node_matrix.cols() != node_dim
                || set.edge_matrix.cols() != edge_dim
                || set.global_vector.len() != global_dim
            {
                return Err(Error::Config(format!(
                    "molecule {g} in batch has feature widths differing from the first"
                )));
            }
            nodes.extend_from_slice(set.node_matrix.data());
            for &(s, t) in &set.edge_index {
                src.push(offset + s);
                dst.push(offset + t);
            }
            edges.extend_from_slice(set.edge_matrix.data());
            ids.extend(std::iter::repeat_n(g, n));
            globals.extend_from_slice(&set.global_vector);
            match (&set.label_vector, label_dim) {
                (Some(l), Some(d)) if l.len() == d => labels.extend_from_slice(l),
                _ => keep_labels = false,
            }
            offset += n;
        }
        let bond_edges = src.len();
        for i in 0..offset {
            src.push(i);
            dst.push(i);
        }
        edges.resize(src.len() * edge_dim, 0.0);
        let graph_count = sets.len();
        Ok(BatchGraph {
            node_features: Tensor::matrix(offset, node_dim, nodes),
            edge_features: Tensor::matrix(src.len(), edge_dim, edges),
            edge_src: src.into(),
            edge_dst: dst.into(),
            graph_ids: ids.into(),
            graph_count,
            global_features: Tensor::matrix(graph_count, global_dim, globals),
            labels: keep_labels
                .then(|| Tensor::matrix(graph_count, label_dim.unwrap_or(0), labels)),
            bond_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_features.rows()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_src.len()
    }

    /// `(source, target)` pairs, self-edges included.
    pub fn edge_index(&self) -> Vec<(usize, usize)> {
        self.edge_src.iter().copied().zip(self.edge_dst.iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::featurize::{FeatureConfig, Featurizer};

    #[test]
    fn packs_with_offsets_and_self_loops() {
        let f = Featurizer::new(FeatureConfig::default()).unwrap();
        let a = f.featurize(&parse_smiles("CCO").unwrap());
        let b = f.featurize(&parse_smiles("C").unwrap());
        let batch = BatchGraph::from_features(&[&a, &b]).unwrap();
        assert_eq!(batch.node_count(), 4);
        assert_eq!(batch.bond_edges, 4);
        assert_eq!(batch.edge_count(), 8);
        assert_eq!(&*batch.graph_ids, &[0, 0, 0, 1]);
        assert_eq!(batch.edge_index()[7], (3, 3));
        assert!(batch.edge_features.row(5).iter().all(|&v| v == 0.0));
        assert_eq!(batch.global_features.shape(), &[2, 4262]);
        assert!(batch.labels.is_none());
        for (s, t) in batch.edge_index() {
            assert_eq!(batch.graph_ids[s], batch.graph_ids[t]);
        }
    }

    #[test]
    fn rejects_empty_batch() {
        assert!(BatchGraph::from_features(&[]).is_err());
    }
}
