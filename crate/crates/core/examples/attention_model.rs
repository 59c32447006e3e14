//! A forward pass through the attention network and a look at its attention weights.

use odorgat::error::Result;
use odorgat::featurize::{FeatureConfig, Featurizer};
use odorgat::model::{forward, probabilities, BatchGraph, Mode, ModelConfig, ModelParams};
use odorgat::tensor::Tape;

fn main() -> Result<()> {
    let featurizer = Featurizer::new(FeatureConfig::default())?;
    let config = ModelConfig {
        label_count: 5,
        ..ModelConfig::default()
    }
    .with_inputs(&featurizer);
    let params = ModelParams::init(&config, 42)?;

    let molecules = ["CCO", "c1ccccc1C=O"];
    let sets = molecules
        .iter()
        .map(|s| Ok(featurizer.featurize(&featurizer.parse(s)?)))
        .collect::<Result<Vec<_>>>()?;
    let batch = BatchGraph::from_features(&sets.iter().collect::<Vec<_>>())?;

    let mut tape = Tape::new();
    let vars = params.register(&mut tape, false);
    let out = forward(&mut tape, &params, &vars, &batch, Mode::Infer, None)?;
    let probs = probabilities(tape.value(out.logits));
    for (g, smiles) in molecules.iter().enumerate() {
        println!("{smiles}: {:?}", probs.row(g).iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>());
    }

    let first = tape.value(out.layer_attention[0]);
    println!("layer 1, head 1 attention on the in-edges of atom 1 of ethanol:");
    for e in 0..batch.edge_count() {
        if batch.edge_dst[e] == 1 {
            println!("  from atom {}: {:.4}", batch.edge_src[e], first.get(e, 0));
        }
    }
    let readout = tape.value(out.readout_attention);
    println!("readout weights: {:?}", readout.data().iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>());
    Ok(())
}
