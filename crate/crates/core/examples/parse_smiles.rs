//! Parse SMILES into molecular graphs and inspect atoms, bonds and rings.
//!
//! `cargo run --example parse_smiles -- "CC(=O)Oc1ccccc1C(=O)O"`

use odorgat::chem::parse_smiles;
use odorgat::error::Result;

fn main() -> Result<()> {
    let inputs: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if inputs.is_empty() {
        vec!["CC(=O)Oc1ccccc1C(=O)O".to_string(), "c1ccc2ccccc2c1".into(), "C1CC".into()]
    } else {
        inputs
    };
    for smiles in &inputs {
        let graph = match parse_smiles(smiles) {
            Ok(g) => g,
            Err(e) => {
                println!("{smiles}: rejected ({e})");
                continue;
            }
        };
        println!(
            "{smiles}: {} heavy atoms, {} bonds, {} rings",
            graph.atom_count(),
            graph.bond_count(),
            graph.rings().len()
        );
        for (i, atom) in graph.atoms().iter().enumerate() {
            println!(
                "  atom {i:>2} {:<2} degree {} H {} charge {:+} aromatic {} ring {}",
                atom.element.symbol(),
                graph.degree(i),
                atom.implicit_h_count,
                atom.formal_charge,
                atom.aromatic,
                atom.in_ring
            );
        }
        for bond in graph.bonds() {
            let (u, v) = bond.endpoints;
            println!("  bond {u}-{v} {:?} conjugated {}", bond.order, bond.conjugated);
        }
    }
    Ok(())
}
