//! Morgan, MACCS and topological fingerprints, and their invariance to atom order.

use odorgat::chem::parse_smiles;
use odorgat::error::Result;
use odorgat::featurize::{maccs_fingerprint, morgan_fingerprint, topological_fingerprint, MaccsKeys};

fn on_bits(v: &[f64]) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, &b)| b > 0.0).map(|(i, _)| i).collect()
}

fn main() -> Result<()> {
    let a = parse_smiles("CCO")?;
    let b = parse_smiles("OCC")?;
    let morgan_a = morgan_fingerprint(&a, 2, 2048);
    let morgan_b = morgan_fingerprint(&b, 2, 2048);
    println!("ethanol Morgan bits: {:?}", on_bits(&morgan_a));
    println!("same bits from OCC: {}", morgan_a == morgan_b);

    let vanillin = parse_smiles("O=Cc1ccc(O)c(OC)c1")?;
    let maccs = maccs_fingerprint(&vanillin, MaccsKeys::builtin());
    println!("vanillin MACCS keys (1-based): {:?}", on_bits(&maccs).iter().map(|b| b + 1).collect::<Vec<_>>());
    let topo = topological_fingerprint(&vanillin, 2048);
    println!("vanillin topological bits set: {}", on_bits(&topo).len());
    Ok(())
}
