//! The graph-attention network: three attention layers, a readout that fuses
//! attention, mean and max pooling with a global-fingerprint branch, and a
//! two-layer output head.

mod batch;
mod config;
mod network;
mod params;

pub use batch::BatchGraph;
pub use config::{LayerShape, ModelConfig};
pub use network::{
    attention_readout, forward, gat_layer, predict_logits, probabilities, ForwardOutput, LayerOutput, LayerVars,
    Mode, Norm, ReadoutOutput,
};
pub use params::{HeadSlots, LayerSlots, ModelParams, ParamKind, ParamLayout, ParamSpec, RunningStats};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::chem::parse_smiles;
    use crate::featurize::{FeatureConfig, Featurizer};
    use crate::tensor::{Tape, Tensor, Var};

    fn tiny_graph(nodes: Vec<Vec<f64>>, edges: &[(usize, usize)], edge_feats: Vec<Vec<f64>>) -> BatchGraph {
        let n = nodes.len();
        let d = nodes[0].len();
        let ed = edge_feats.first().map_or(2, Vec::len);
        BatchGraph {
            node_features: Tensor::from_rows(&nodes, d).unwrap(),
            edge_src: edges.iter().map(|e| e.0).collect::<Vec<_>>().into(),
            edge_dst: edges.iter().map(|e| e.1).collect::<Vec<_>>().into(),
            edge_features: Tensor::from_rows(&edge_feats, ed).unwrap(),
            graph_ids: vec![0; n].into(),
            graph_count: 1,
            global_features: Tensor::zeros(&[1, 1]),
            labels: None,
            bond_edges: edges.len(),
        }
    }

    fn layer_vars(tape: &mut Tape, rng: &mut ChaCha8Rng, input: usize, shape: LayerShape, edge_dim: usize) -> LayerVars {
        let mut rand = |r: usize, c: usize| Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let weight = tape.param(rand(input, shape.output()));
        let attention = tape.param(rand(2 * shape.width + edge_dim, shape.heads));
        LayerVars {
            weight,
            attention,
            norm_scale: tape.constant(Tensor::filled(&[1, shape.output()], 1.0)),
            norm_shift: tape.constant(Tensor::zeros(&[1, shape.output()])),
        }
    }

    fn identity_norm(width: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; width], vec![1.0 - 1e-5; width])
    }

    #[test]
    fn single_in_edge_takes_all_attention() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = tiny_graph(vec![vec![0.3, -0.7, 1.1], vec![0.5, 0.2, -0.4]], &[(0, 1)], vec![vec![1.0, 0.0]]);
        let shape = LayerShape { input: 3, heads: 2, width: 3 };
        let mut tape = Tape::new();
        let v = layer_vars(&mut tape, &mut rng, 3, shape, 2);
        let h = tape.constant(batch.node_features.clone());
        let (mean, var) = identity_norm(6);
        let norm = Norm::Running { mean: &mean, var: &var, eps: 1e-5 };
        let out = gat_layer(&mut tape, h, &batch, v, shape, 0.2, norm).unwrap();
        assert_eq!(tape.value(out.attention).data(), &[1.0, 1.0]);
        let w = tape.value(v.weight).clone();
        for j in 0..6 {
            let pre: f64 = (0..3).map(|k| batch.node_features.get(0, k) * w.get(k, j)).sum();
            assert!((tape.value(out.hidden).get(1, j) - pre.max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_neighbors_split_attention() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch = tiny_graph(
            vec![vec![1.0, 2.0], vec![0.5, -1.0], vec![0.5, -1.0]],
            &[(1, 0), (2, 0)],
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        );
        let shape = LayerShape { input: 2, heads: 4, width: 3 };
        let mut tape = Tape::new();
        let v = layer_vars(&mut tape, &mut rng, 2, shape, 2);
        let h = tape.constant(batch.node_features.clone());
        let out = gat_layer(&mut tape, h, &batch, v, shape, 0.2, Norm::Batch { eps: 1e-5 }).unwrap();
        assert!(tape.value(out.attention).data().iter().all(|&a| (a - 0.5).abs() < 1e-15));
    }

    #[test]
    fn readout_examples() {
        let mut tape = Tape::new();
        let batch = BatchGraph {
            graph_ids: vec![0, 1, 1, 1].into(),
            graph_count: 2,
            ..tiny_graph(vec![vec![0.0]; 4], &[], vec![])
        };
        let h = tape.constant(Tensor::matrix(4, 2, vec![3.0, -1.0, 0.5, 0.25, 0.5, 0.25, 0.5, 0.25]));
        let w = tape.constant(Tensor::column(vec![0.7, -0.2]));
        let r = attention_readout(&mut tape, h, &batch, w).unwrap();
        let pooled = tape.value(r.pooled);
        assert_eq!(pooled.row(0), &[3.0, -1.0]);
        assert!((pooled.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((pooled.get(1, 1) - 0.25).abs() < 1e-15);
    }

    fn small_setup() -> (Featurizer, ModelConfig) {
        let features = Featurizer::new(FeatureConfig {
            morgan_bits: 64,
            topo_bits: 64,
            ..FeatureConfig::default()
        })
        .unwrap();
        let config = ModelConfig {
            label_count: 3,
            heads: 2,
            hidden_width: 4,
            final_width: 5,
            global_hidden: 6,
            global_out: 3,
            fusion_hidden: 7,
            ..ModelConfig::default()
        }
        .with_inputs(&features);
        (features, config)
    }

    fn batch_of(f: &Featurizer, smiles: &[&str]) -> BatchGraph {
        let sets: Vec<_> = smiles.iter().map(|s| f.featurize(&parse_smiles(s).unwrap())).collect();
        BatchGraph::from_features(&sets.iter().collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn forward_shape_and_duplicate_rows() {
        let (f, config) = small_setup();
        let params = ModelParams::init(&config, 3).unwrap();
        let batch = batch_of(&f, &["CCO", "c1ccccc1O", "CCO", "C"]);
        let logits = predict_logits(&params, &batch).unwrap();
        assert_eq!(logits.shape(), &[4, 3]);
        for j in 0..3 {
            assert!((logits.get(0, j) - logits.get(2, j)).abs() < 1e-8);
        }
        assert!(probabilities(&logits).data().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn default_shape_output() {
        let f = Featurizer::new(FeatureConfig::default()).unwrap();
        let config = ModelConfig {
            label_count: 154,
            ..ModelConfig::default()
        };
        config.check_inputs(&f).unwrap();
        let params = ModelParams::init(&config, 0).unwrap();
        let logits = predict_logits(&params, &batch_of(&f, &["CC(=O)OCC", "N"])).unwrap();
        assert_eq!(logits.shape(), &[2, 154]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (f, config) = small_setup();
        let wide = Featurizer::new(FeatureConfig::default()).unwrap();
        assert!(config.check_inputs(&wide).is_err());
        let params = ModelParams::init(&config, 3).unwrap();
        let err = predict_logits(&params, &batch_of(&wide, &["CC"])).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"), "{err}");
        assert!(predict_logits(&params, &batch_of(&f, &["CC"])).is_ok());
    }

    #[test]
    fn training_mode_reports_stats_and_softmax_sums() {
        let (f, config) = small_setup();
        let params = ModelParams::init(&config, 4).unwrap();
        let batch = batch_of(&f, &["CC(N)C(=O)O", "c1ccncc1", "O"]);
        let mut tape = Tape::new();
        let vars = params.register(&mut tape, true);
        let out = forward(&mut tape, &params, &vars, &batch, Mode::Train, None).unwrap();
        assert_eq!(out.batch_stats.len(), 3);
        for &att in &out.layer_attention {
            let a = tape.value(att);
            for node in 0..batch.node_count() {
                for k in 0..a.cols() {
                    let s: f64 = (0..a.rows()).filter(|&e| batch.edge_dst[e] == node).map(|e| a.get(e, k)).sum();
                    assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
        let r = tape.value(out.readout_attention);
        for g in 0..3 {
            let s: f64 = (0..r.rows()).filter(|&i| batch.graph_ids[i] == g).map(|i| r.get(i, 0)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_only_changes_training_passes() {
        let (f, mut config) = small_setup();
        config.dropout = 0.5;
        let params = ModelParams::init(&config, 4).unwrap();
        let batch = batch_of(&f, &["CCCC", "CCO"]);
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut tape = Tape::new();
            let vars = params.register(&mut tape, true);
            let out = forward(&mut tape, &params, &vars, &batch, Mode::Train, Some(&mut rng)).unwrap();
            tape.value(out.logits).clone()
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1), run(2));
        assert_eq!(predict_logits(&params, &batch).unwrap(), predict_logits(&params, &batch).unwrap());
    }

    #[test]
    fn ids_are_shared_not_copied() {
        let (f, _) = small_setup();
        let batch = batch_of(&f, &["CC"]);
        let clone = batch.clone();
        assert!(Arc::ptr_eq(&batch.edge_src, &clone.edge_src));
    }
    #[test]
    fn atom_order_does_not_change_predictions() {
        let (f, config) = small_setup();
        let params = ModelParams::init(&config, 5).unwrap();
        let graph = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let n = graph.atom_count();
        let perm: Vec<usize> = (0..n).rev().collect();
        let a = predict_logits(&params, &BatchGraph::from_features(&[&f.featurize(&graph)]).unwrap()).unwrap();
        let b = predict_logits(&params, &BatchGraph::from_features(&[&f.featurize(&graph.permuted(&perm))]).unwrap())
            .unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn molecules_in_a_batch_do_not_interact_at_inference() {
        let (f, config) = small_setup();
        let params = ModelParams::init(&config, 6).unwrap();
        let alone = predict_logits(&params, &batch_of(&f, &["CCN"])).unwrap();
        let mixed = predict_logits(&params, &batch_of(&f, &["c1ccccc1", "CCN", "O=C=O"])).unwrap();
        for j in 0..3 {
            assert!((alone.get(0, j) - mixed.get(1, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn end_to_end_gradient_matches_finite_differences() {
        use crate::error::{Error, TensorError};
        use crate::loss::{adaptive_loss, l2_penalty, LossConfig};
        use crate::tensor::grad_check;

        let (f, config) = small_setup();
        let params = ModelParams::init(&config, 7).unwrap();
        let batch = batch_of(&f, &["CC(=O)O", "c1ccccc1N", "OCC=C"]);
        let targets = Tensor::matrix(3, 3, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let loss_config = LossConfig::default();
        let initial = params.tensors.clone();
        let model = params.clone();
        let objective = |tape: &mut Tape, vars: &[Var]| {
            let out = forward(tape, &model, vars, &batch, Mode::Train, None).map_err(|e| match e {
                Error::Tensor(t) => t,
                other => TensorError::Invalid {
                    op: "forward",
                    message: other.to_string(),
                },
            })?;
            let y = tape.constant(targets.clone());
            let data = adaptive_loss(tape, out.logits, y, 0.3, &loss_config)?;
            let reg = l2_penalty(tape, &model.penalized(vars), 1e-3)?;
            tape.add(data, reg)
        };
        let report = grad_check(objective, &initial, 1e-6).unwrap();
        assert!(report.max_relative_error < 1e-3, "{report:?}");
    }
}
