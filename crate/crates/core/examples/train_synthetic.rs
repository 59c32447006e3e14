//! Train on rule-labeled synthetic molecules, evaluate on a held-out split,
//! save a checkpoint, load it back and predict.
//!
//! `cargo run --release --example train_synthetic -- [molecules] [epochs]`

use odorgat::checkpoint::Checkpoint;
use odorgat::error::Result;
use odorgat::synth::synthetic_records;
use odorgat::train::{predict, train_observed, TrainConfig};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|a| a.parse().ok()).unwrap_or(120);
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(40);
    let records = synthetic_records(n, 7);
    let config = TrainConfig {
        epochs,
        eval_every: 10,
        ..TrainConfig::default()
    };
    let outcome = train_observed(&config, &records, |e| {
        if let Some(m) = &e.metrics {
            println!("epoch {:>3} loss {:.5} test AUROC {:?} macro F1 {:.3}", e.epoch, e.train_loss, m.mean_auroc, m.macro_f1);
        }
        Ok(())
    })?;
    if let Some(report) = &outcome.test_report {
        println!("{}", report.table_row("synthetic"));
    }

    let path = std::env::temp_dir().join("odorgat_synthetic.ckpt");
    outcome.final_checkpoint.save(&path)?;
    let loaded = Checkpoint::load(&path)?;
    for line in predict(&loaded, &["CCOC(=O)C=C", "c1ccccc1CCN", "not smiles"], Some(3))? {
        match line.result {
            Ok(p) => println!("{}: {:?}", p.smiles, p.scores),
            Err(e) => println!("line {}: {e}", line.line),
        }
    }
    Ok(())
}
