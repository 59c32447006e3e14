//! SMARTS matching and the shipped functional-group patterns.

use odorgat::chem::{match_pattern, parse_smarts, parse_smiles};
use odorgat::error::Result;
use odorgat::featurize::{functional_group_vector, PatternSet};

fn main() -> Result<()> {
    let graph = parse_smiles("OCC(=O)OCc1ccc(O)cc1")?;
    let ester = parse_smarts("[#6][CX3](=O)[OX2H0][#6]")?;
    for m in match_pattern(&ester, &graph) {
        println!("ester match on atoms {m:?}");
    }

    let patterns = PatternSet::builtin();
    let present = functional_group_vector(&graph, patterns);
    for (name, bit) in patterns.names().zip(present) {
        if bit > 0.0 {
            println!("group present: {name}");
        }
    }

    let matches = patterns.match_all(&graph);
    for atom in 0..graph.atom_count() {
        let groups: Vec<&str> = patterns
            .names()
            .enumerate()
            .filter(|(g, _)| matches.participates(*g, atom))
            .map(|(_, n)| n)
            .collect();
        println!("atom {atom}: {}", groups.join(", "));
    }
    Ok(())
}
