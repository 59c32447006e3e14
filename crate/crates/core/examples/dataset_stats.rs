//! Load a `smiles,labels` CSV, show rejected rows, label statistics and a
//! seeded train/test split.
//!
//! `cargo run --example dataset_stats -- path/to/data.csv`

use std::path::PathBuf;

use odorgat::data::{load_dataset, split_dataset, DatasetStats, LabelPolicy, LabelVocabulary};
use odorgat::error::Result;
use odorgat::synth::synthetic_csv;

fn main() -> Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("odorgat_synthetic.csv");
            let mut text = synthetic_csv(60, 3);
            text.push_str("C1CC,fruity\nCCO,\n");
            std::fs::write(&p, text).map_err(|e| odorgat::error::DataError::io(&p, e))?;
            p
        }
    };
    let data = load_dataset(&path, LabelPolicy::Required)?;
    println!("{} of {} rows accepted", data.len(), data.total_rows);
    for r in &data.rejections {
        println!("  row {}: {}", r.row, r.reason);
    }
    print!("{}", DatasetStats::compute(&data.records).to_table());
    let vocab = LabelVocabulary::from_records(&data.records);
    println!("vocabulary: {}", vocab.names().join(", "));
    let (train, test) = split_dataset(&data.records, 0.8, 0)?;
    println!("split: {} train, {} test", train.len(), test.len());
    Ok(())
}
