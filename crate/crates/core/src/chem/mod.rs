//! Molecular graphs: SMILES and SMARTS parsing, ring perception, aromaticity and
//! substructure matching.

mod aromatic;
pub mod element;
pub mod graph;
pub mod paths;
pub mod rings;
pub mod smarts;
pub mod smiles;

pub use element::{Element, ElementRecord, ElementTable};
pub use graph::{AtomNode, BondEdge, BondOrder, MolecularGraph};
pub use paths::{shortest_paths, DISCONNECTED};
pub use rings::find_rings;
pub use smarts::{match_pattern, parse_smarts, SmartsPattern};
pub use smiles::{parse_smiles, parse_smiles_with};
