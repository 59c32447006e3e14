//! Node, edge and molecule-level feature extraction.
//!
//! Node rows follow the offsets in [`atom_layout`]. Edge rows are emitted twice
//! per bond: row `2b` runs from the first endpoint to the second, row `2b + 1`
//! the other way, and the two differ only in the order of the degree pair.
//!
//! Disabled feature groups keep their width and are zero-filled: with
//! `atomic` off every node entry except the functional-group bits is 0, with
//! `edge` off every edge row is 0, and with `fingerprint` off the global
//! vector is 0.

mod bond;
mod config;
mod fingerprint;
mod maccs;
mod patterns;

use serde::{Deserialize, Serialize};

pub use bond::{bond_features, bond_order_fractions, BondFeatures, BOND_DIM};
pub use config::{
    normalize_property, FeatureConfig, FeatureGroups, GroupLevel, ATOMIC_VOLUME,
    ELECTRONEGATIVITY, ELECTRON_AFFINITY, PROPERTIES,
};
pub use fingerprint::{
    hash_words, morgan_fingerprint, morgan_invariants, topological_fingerprint, HASH_SEED,
};
pub use maccs::{maccs_fingerprint, MaccsKey, MaccsKeys, MACCS_BITS};
pub use patterns::{functional_group_vector, GroupMatches, PatternSet};

use crate::chem::{parse_smiles_with, Element, ElementTable, MolecularGraph};
use crate::error::{ChemError, Error};
use crate::tensor::Tensor;

/// Column offsets of the node feature row.
pub mod atom_layout {
    use std::ops::Range;

    pub const ELEMENT: Range<usize> = 0..11;
    pub const DEGREE: Range<usize> = 11..17;
    pub const CHARGE: usize = 17;
    pub const RADICAL: usize = 18;
    pub const AROMATIC: usize = 19;
    pub const RING: usize = 20;
    pub const HYDROGENS: Range<usize> = 21..26;
    pub const ELECTRONEGATIVITY: usize = 26;
    pub const VOLUME: usize = 27;
    pub const ELECTRON_AFFINITY: usize = 28;
    /// First functional-group bit.
    pub const GROUPS: usize = 29;
}

/// Features of one molecule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    /// `atoms × node_dim`.
    pub node_matrix: Tensor,
    /// Directed `(source, target)` pairs, two per bond.
    pub edge_index: Vec<(usize, usize)>,
    /// `2 · bonds × BOND_DIM`.
    pub edge_matrix: Tensor,
    pub global_vector: Vec<f64>,
    pub label_vector: Option<Vec<f64>>,
}

impl FeatureSet {
    pub fn atom_count(&self) -> usize {
        self.node_matrix.rows()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_index.len()
    }
}

/// A feature configuration with its element table and pattern files loaded.
#[derive(Debug, Clone)]
pub struct Featurizer {
    config: FeatureConfig,
    elements: ElementTable,
    patterns: PatternSet,
    maccs: MaccsKeys,
}

impl Featurizer {
    /// Validates `config` and reads any replacement data files it names.
    pub fn new(config: FeatureConfig) -> Result<Featurizer, Error> {
        config.validate()?;
        let elements = match &config.element_file {
            Some(p) => ElementTable::from_path(p)?,
            None => ElementTable::builtin().clone(),
        };
        let patterns = match &config.pattern_file {
            Some(p) => PatternSet::from_path(p)?,
            None => PatternSet::builtin().clone(),
        };
        let maccs = match &config.maccs_file {
            Some(p) => MaccsKeys::from_path(p)?,
            None => MaccsKeys::builtin().clone(),
        };
        Ok(Featurizer {
            config,
            elements,
            patterns,
            maccs,
        })
    }

    /// Builds from already-loaded tables; file paths in `config` are ignored.
    pub fn from_parts(
        config: FeatureConfig,
        elements: ElementTable,
        patterns: PatternSet,
        maccs: MaccsKeys,
    ) -> Result<Featurizer, Error> {
        config.validate()?;
        Ok(Featurizer {
            config,
            elements,
            patterns,
            maccs,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn elements(&self) -> &ElementTable {
        &self.elements
    }

    pub fn patterns(&self) -> &PatternSet {
        &self.patterns
    }

    pub fn maccs(&self) -> &MaccsKeys {
        &self.maccs
    }

    /// Parses SMILES against this featurizer's element table.
    pub fn parse(&self, smiles: &str) -> Result<MolecularGraph, ChemError> {
        parse_smiles_with(smiles, &self.elements)
    }

    pub fn node_dim(&self) -> usize {
        atom_layout::GROUPS + self.patterns.len() * self.config.functional_groups.blocks()
    }

    pub fn edge_dim(&self) -> usize {
        BOND_DIM
    }

    pub fn global_dim(&self) -> usize {
        self.config.global_dim()
    }

    /// Node feature row of `atom`, given the molecule's pattern matches.
    pub fn atom_features(&self, graph: &MolecularGraph, atom: usize, matches: &GroupMatches) -> Vec<f64> {
        let mut row = vec![0.0; self.node_dim()];
        if self.config.enabled_groups.atomic {
            self.fill_atomic(graph, atom, &mut row);
        }
        let n = self.patterns.len();
        let mut offset = atom_layout::GROUPS;
        if matches!(self.config.functional_groups, GroupLevel::Atom | GroupLevel::Both) {
            for g in 0..n {
                if matches.participates(g, atom) {
                    row[offset + g] = 1.0;
                }
            }
            offset += n;
        }
        if matches!(self.config.functional_groups, GroupLevel::Molecule | GroupLevel::Both) {
            for (g, present) in matches.presence().into_iter().enumerate() {
                row[offset + g] = present;
            }
        }
        row
    }

    fn fill_atomic(&self, graph: &MolecularGraph, atom: usize, row: &mut [f64]) {
        use atom_layout as l;
        let a = graph.atom(atom);
        row[l::ELEMENT.start + a.element.index()] = 1.0;
        row[l::DEGREE.start + graph.degree(atom).min(5)] = 1.0;
        row[l::CHARGE] = (f64::from(a.formal_charge.clamp(-2, 2)) + 2.0) / 4.0;
        row[l::RADICAL] = f64::from(a.radical_electrons.min(2)) / 2.0;
        row[l::AROMATIC] = f64::from(u8::from(a.aromatic));
        row[l::RING] = f64::from(u8::from(a.in_ring));
        row[l::HYDROGENS.start + a.implicit_h_count.min(4) as usize] = 1.0;
        let record = self.elements.get(a.element);
        let props = [
            (l::ELECTRONEGATIVITY, record.electronegativity, ELECTRONEGATIVITY),
            (l::VOLUME, record.atomic_volume, ATOMIC_VOLUME),
            (l::ELECTRON_AFFINITY, record.electron_affinity, ELECTRON_AFFINITY),
        ];
        for (col, value, name) in props {
            row[col] = self
                .config
                .normalize_property(value, name)
                .expect("validated config has every property");
        }
    }

    /// Morgan, MACCS and topological bits, concatenated in that order.
    pub fn global_features(&self, graph: &MolecularGraph) -> Vec<f64> {
        if !self.config.enabled_groups.fingerprint {
            return vec![0.0; self.global_dim()];
        }
        let mut out = morgan_fingerprint(graph, self.config.morgan_radius, self.config.morgan_bits);
        out.extend(maccs_fingerprint(graph, &self.maccs));
        out.extend(topological_fingerprint(graph, self.config.topo_bits));
        out
    }

    pub fn featurize(&self, graph: &MolecularGraph) -> FeatureSet {
        let matches = self.patterns.match_all(graph);
        let node_dim = self.node_dim();
        let mut nodes = Vec::with_capacity(graph.atom_count() * node_dim);
        for atom in 0..graph.atom_count() {
            nodes.extend(self.atom_features(graph, atom, &matches));
        }
        let fractions = bond_order_fractions(graph);
        let mut edge_index = Vec::with_capacity(2 * graph.bond_count());
        let mut edges = Vec::with_capacity(2 * graph.bond_count() * BOND_DIM);
        for (b, bond) in graph.bonds().iter().enumerate() {
            let (u, v) = bond.endpoints;
            let f = bond::bond_features_with(graph, b, fractions);
            edge_index.push((u, v));
            edge_index.push((v, u));
            if self.config.enabled_groups.edge {
                edges.extend(f.row(false));
                edges.extend(f.row(true));
            } else {
                edges.extend([0.0; 2 * BOND_DIM]);
            }
        }
        FeatureSet {
            node_matrix: Tensor::matrix(graph.atom_count(), node_dim, nodes),
            edge_matrix: Tensor::matrix(edge_index.len(), BOND_DIM, edges),
            edge_index,
            global_vector: self.global_features(graph),
            label_vector: None,
        }
    }

    /// Human-readable names for the node feature columns.
    pub fn node_feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Element::ALL.iter().map(|e| format!("element_{e}")).collect();
        names.extend((0..6).map(|d| format!("degree_{d}")));
        names.extend(["charge", "radical", "aromatic", "ring"].map(String::from));
        names.extend((0..5).map(|h| format!("implicit_h_{h}")));
        names.extend(PROPERTIES.map(String::from));
        let level = self.config.functional_groups;
        if matches!(level, GroupLevel::Atom | GroupLevel::Both) {
            names.extend(self.patterns.names().map(|n| format!("atom_group_{n}")));
        }
        if matches!(level, GroupLevel::Molecule | GroupLevel::Both) {
            names.extend(self.patterns.names().map(|n| format!("mol_group_{n}")));
        }
        names
    }
}

/// Builds a [`Featurizer`] for `config` and featurizes one molecule.
pub fn featurize_molecule(graph: &MolecularGraph, config: &FeatureConfig) -> Result<FeatureSet, Error> {
    Ok(Featurizer::new(config.clone())?.featurize(graph))
}

/// Concatenated global fingerprint under `config`.
pub fn global_features(graph: &MolecularGraph, config: &FeatureConfig) -> Result<Vec<f64>, Error> {
    Ok(Featurizer::new(config.clone())?.global_features(graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn default_featurizer() -> Featurizer {
        Featurizer::new(FeatureConfig::default()).unwrap()
    }

    fn one_hot_sum(row: &[f64], range: std::ops::Range<usize>) -> f64 {
        row[range].iter().sum()
    }

    #[test]
    fn dimensions() {
        let f = default_featurizer();
        assert_eq!(f.node_dim(), 49);
        assert_eq!(f.node_feature_names().len(), 49);
        assert_eq!(f.global_dim(), 4262);
        let set = f.featurize(&parse_smiles("CCO").unwrap());
        assert_eq!(set.node_matrix.shape(), &[3, 49]);
        assert_eq!(set.edge_matrix.shape(), &[4, BOND_DIM]);
        assert_eq!(set.global_vector.len(), 4262);
    }

    #[test]
    fn carbon_and_oxygen_rows() {
        let f = default_featurizer();
        let g = parse_smiles("CCO").unwrap();
        let set = f.featurize(&g);
        let c = set.node_matrix.row(0);
        assert_eq!(c[atom_layout::ELEMENT.start + Element::C.index()], 1.0);
        assert_eq!(c[atom_layout::DEGREE.start + 1], 1.0);
        assert_eq!(one_hot_sum(c, atom_layout::ELEMENT), 1.0);
        assert_eq!(one_hot_sum(c, atom_layout::DEGREE), 1.0);
        assert_eq!(one_hot_sum(c, atom_layout::HYDROGENS), 1.0);
        let o = set.node_matrix.row(2);
        assert!((o[atom_layout::ELECTRONEGATIVITY] - 0.825).abs() < 1e-12);
        let hydroxyl = f.patterns().names().position(|n| n == "hydroxyl").unwrap();
        assert_eq!(o[atom_layout::GROUPS + hydroxyl], 1.0);
        assert_eq!(c[atom_layout::GROUPS + hydroxyl], 0.0);
    }

    #[test]
    fn edge_rows_pair_up() {
        let f = default_featurizer();
        let set = f.featurize(&parse_smiles("CC(=O)Nc1ccccc1").unwrap());
        for b in 0..set.edge_count() / 2 {
            let (fwd, rev) = (set.edge_matrix.row(2 * b), set.edge_matrix.row(2 * b + 1));
            assert_eq!(fwd[..6], rev[..6]);
            assert_eq!((fwd[6], fwd[7]), (rev[7], rev[6]));
            assert_eq!(fwd[8..], rev[8..]);
            assert_eq!(set.edge_index[2 * b], (set.edge_index[2 * b + 1].1, set.edge_index[2 * b + 1].0));
        }
    }

    #[test]
    fn maccs_slice_in_global_vector() {
        let f = default_featurizer();
        let g = parse_smiles("Oc1ccccc1C=O").unwrap();
        let global = f.global_features(&g);
        assert_eq!(&global[2048..2214], maccs_fingerprint(&g, f.maccs()).as_slice());
    }

    #[test]
    fn ablations_keep_dimensions() {
        let g = parse_smiles("CCO").unwrap();
        let config = FeatureConfig {
            enabled_groups: FeatureGroups {
                atomic: false,
                edge: false,
                fingerprint: false,
            },
            ..FeatureConfig::default()
        };
        let f = Featurizer::new(config).unwrap();
        let set = f.featurize(&g);
        assert_eq!(set.node_matrix.shape(), &[3, 49]);
        for i in 0..3 {
            assert!(set.node_matrix.row(i)[..atom_layout::GROUPS].iter().all(|&v| v == 0.0));
        }
        let hydroxyl = f.patterns().names().position(|n| n == "hydroxyl").unwrap();
        assert_eq!(set.node_matrix.get(2, atom_layout::GROUPS + hydroxyl), 1.0);
        assert!(set.edge_matrix.data().iter().all(|&v| v == 0.0));
        assert_eq!(set.edge_matrix.shape(), &[4, BOND_DIM]);
        assert_eq!(set.global_vector, vec![0.0; 4262]);
    }

    #[test]
    fn group_levels() {
        let g = parse_smiles("CCO").unwrap();
        let both = Featurizer::new(FeatureConfig {
            functional_groups: GroupLevel::Both,
            ..FeatureConfig::default()
        })
        .unwrap();
        assert_eq!(both.node_dim(), 69);
        let set = both.featurize(&g);
        let hydroxyl = both.patterns().names().position(|n| n == "hydroxyl").unwrap();
        // The first carbon is outside the hydroxyl match but the molecule has one.
        assert_eq!(set.node_matrix.get(0, atom_layout::GROUPS + hydroxyl), 0.0);
        assert_eq!(set.node_matrix.get(0, atom_layout::GROUPS + 20 + hydroxyl), 1.0);
        let mol = Featurizer::new(FeatureConfig {
            functional_groups: GroupLevel::Molecule,
            ..FeatureConfig::default()
        })
        .unwrap();
        assert_eq!(mol.featurize(&g).node_matrix.get(0, atom_layout::GROUPS + hydroxyl), 1.0);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = FeatureConfig {
            topo_bits: 100,
            ..FeatureConfig::default()
        };
        assert!(Featurizer::new(bad.clone()).is_err());
        assert!(featurize_molecule(&parse_smiles("C").unwrap(), &bad).is_err());
    }
}
