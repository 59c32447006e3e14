//! Node, edge and molecule-level features, including ablated feature groups.

use odorgat::error::Result;
use odorgat::featurize::{FeatureConfig, FeatureGroups, Featurizer, GroupLevel};

fn main() -> Result<()> {
    let featurizer = Featurizer::new(FeatureConfig::default())?;
    let graph = featurizer.parse("CC(=O)OCC")?;
    let set = featurizer.featurize(&graph);
    println!(
        "node matrix {:?}, edge matrix {:?}, global vector {}",
        set.node_matrix.shape(),
        set.edge_matrix.shape(),
        set.global_vector.len()
    );
    let names = featurizer.node_feature_names();
    for (name, v) in names.iter().zip(set.node_matrix.row(1)) {
        if *v != 0.0 {
            println!("  carbonyl carbon {name} = {v:.4}");
        }
    }
    for (e, (s, t)) in set.edge_index.iter().enumerate().take(4) {
        println!("  edge {s}->{t}: {:?}", set.edge_matrix.row(e));
    }

    let ablated = Featurizer::new(FeatureConfig {
        enabled_groups: FeatureGroups {
            fingerprint: false,
            ..FeatureGroups::default()
        },
        functional_groups: GroupLevel::Both,
        ..FeatureConfig::default()
    })?;
    let set = ablated.featurize(&graph);
    println!(
        "no fingerprints, both group levels: node dim {}, nonzero global entries {}",
        ablated.node_dim(),
        set.global_vector.iter().filter(|&&v| v != 0.0).count()
    );
    Ok(())
}
