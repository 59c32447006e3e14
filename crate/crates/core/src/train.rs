//! Training, evaluation and prediction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::data::{split_indices, DatasetRecord, LabelVocabulary};
use crate::error::{ChemError, DataError, Error};
use crate::featurize::{FeatureConfig, FeatureSet, Featurizer};
use crate::loss::{adaptive_loss, l2_penalty, LossConfig};
use crate::metrics::{MetricReport, DEFAULT_THRESHOLD};
use crate::model::{forward, predict_logits, probabilities, BatchGraph, Mode, ModelConfig, ModelParams};
use crate::tensor::{AdamConfig, AdamState, Tape, Tensor};

/// Everything a training run reads besides the data.
///
/// The model's input widths and output count are filled in from the
/// featurizer and the label vocabulary, so the values in `model` for
/// `node_dim`, `edge_dim`, `global_dim` and `label_count` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Training share of the shuffled records.
    pub split_fraction: f64,
    /// Test metrics every this many epochs and after the last; 0 disables.
    pub eval_every: usize,
    pub threshold: f64,
    pub optimizer: AdamConfig,
    pub loss: LossConfig,
    pub features: FeatureConfig,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            seed: 0,
            split_fraction: 0.8,
            eval_every: 10,
            threshold: DEFAULT_THRESHOLD,
            optimizer: AdamConfig::default(),
            loss: LossConfig::default(),
            features: FeatureConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<TrainConfig, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        let o = &self.optimizer;
        if !(o.learning_rate > 0.0 && (0.0..1.0).contains(&o.beta1) && (0.0..1.0).contains(&o.beta2) && o.epsilon > 0.0) {
            return Err(Error::Config("optimizer needs lr > 0, betas in [0, 1) and epsilon > 0".into()));
        }
        self.loss.validate()?;
        self.features.validate()
    }
}

/// Summary metrics attached to an epoch line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub mean_auroc: Option<f64>,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// One line of the epoch log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub alpha1: f64,
    /// Mean total loss over training molecules.
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<EpochMetrics>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_checkpoint: Checkpoint,
    /// Highest test mean AUROC seen at an evaluation epoch.
    pub best_checkpoint: Option<Checkpoint>,
    pub log: Vec<EpochLog>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Final-parameter metrics on the test side.
    pub test_report: Option<MetricReport>,
}

/// Featurizes records in parallel, attaching label rows when `vocab` is given.
pub fn featurize_records(
    featurizer: &Featurizer,
    records: &[DatasetRecord],
    vocab: Option<&LabelVocabulary>,
) -> Result<Vec<FeatureSet>, Error> {
    records
        .par_iter()
        .map(|r| {
            let mut set = featurizer.featurize(&r.graph);
            if let Some(v) = vocab {
                set.label_vector = Some(v.encode(&r.labels)?);
            }
            Ok(set)
        })
        .collect()
}

/// Inference probabilities, batched and run in parallel with frozen parameters.
pub fn predict_sets(params: &ModelParams, sets: &[FeatureSet], batch_size: usize) -> Result<Tensor, Error> {
    let chunks: Vec<Tensor> = sets
        .par_chunks(batch_size.max(1))
        .map(|chunk| {
            let refs: Vec<&FeatureSet> = chunk.iter().collect();
            predict_logits(params, &BatchGraph::from_features(&refs)?)
        })
        .collect::<Result<_, Error>>()?;
    let cols = params.config.label_count;
    let data: Vec<f64> = chunks.iter().flat_map(|t| t.data().iter().copied()).collect();
    Ok(probabilities(&Tensor::matrix(sets.len(), cols, data)))
}

fn targets_of(sets: &[FeatureSet], labels: usize) -> Tensor {
    let data = sets
        .iter()
        .flat_map(|s| s.label_vector.clone().expect("labeled sets"))
        .collect();
    Tensor::matrix(sets.len(), labels, data)
}

fn report_on(params: &ModelParams, sets: &[FeatureSet], vocab: &LabelVocabulary, threshold: f64, batch: usize) -> Result<MetricReport, Error> {
    let probs = predict_sets(params, sets, batch)?;
    Ok(MetricReport::compute(&probs, &targets_of(sets, vocab.len()), vocab.names(), threshold))
}

/// Trains on a seeded split of `records`; see [`train_observed`].
pub fn train(config: &TrainConfig, records: &[DatasetRecord]) -> Result<TrainOutcome, Error> {
    train_observed(config, records, |_| Ok(()))
}

/// Trains on a seeded split of `records`, calling `on_epoch` after every
/// epoch; see [`fit`].
pub fn train_observed(
    config: &TrainConfig,
    records: &[DatasetRecord],
    on_epoch: impl FnMut(&EpochLog) -> Result<(), Error>,
) -> Result<TrainOutcome, Error> {
    config.validate()?;
    let split_seed: u64 = ChaCha8Rng::seed_from_u64(config.seed).gen();
    let (train_idx, test_idx) = split_indices(records.len(), config.split_fraction, split_seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    let mut out = fit(config, &pick(&train_idx), &pick(&test_idx), on_epoch)?;
    out.train_indices = train_idx;
    out.test_indices = test_idx;
    Ok(out)
}

/// Trains on `train` and evaluates on `test` (which may be empty). The label
/// vocabulary covers both.
///
/// Each epoch shuffles the training records, and for every minibatch
/// minimizes the scheduled focal/BCE blend plus the L2 penalty with one Adam
/// step. Returned indices are positions in `train` and `test`.
pub fn fit(
    config: &TrainConfig,
    train: &[DatasetRecord],
    test: &[DatasetRecord],
    mut on_epoch: impl FnMut(&EpochLog) -> Result<(), Error>,
) -> Result<TrainOutcome, Error> {
    config.validate()?;
    if train.is_empty() {
        return Err(DataError::Invalid("no training records".into()).into());
    }
    // The first draw from the run seed is the split seed used by `train`.
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let _split_seed: u64 = master.gen();
    let init_seed: u64 = master.gen();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(master.gen());
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(master.gen());

    let featurizer = Featurizer::new(config.features.clone())?;
    let all: Vec<DatasetRecord> = train.iter().chain(test).cloned().collect();
    let vocab = LabelVocabulary::from_records(&all);
    if vocab.is_empty() {
        return Err(DataError::Invalid("training data has no labels".into()).into());
    }
    let train_owned = featurize_records(&featurizer, train, Some(&vocab))?;
    let train_sets: Vec<&FeatureSet> = train_owned.iter().collect();
    let test_sets = featurize_records(&featurizer, test, Some(&vocab))?;
    let train_idx: Vec<usize> = (0..train.len()).collect();
    let test_idx: Vec<usize> = (0..test.len()).collect();

    let mut model_config = config.model.clone().with_inputs(&featurizer);
    model_config.label_count = vocab.len();
    let mut params = ModelParams::init(&model_config, init_seed)?;
    let mut adam = AdamState::new(config.optimizer, &params.tensors);
    let names = params.names();
    let checkpoint = |params: &ModelParams, adam: &AdamState, epoch: usize| Checkpoint {
        epoch,
        params: params.clone(),
        featurizer: featurizer.clone(),
        vocabulary: vocab.clone(),
        optimizer: Some(adam.clone()),
    };

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, Checkpoint)> = None;
    let mut order: Vec<usize> = (0..train_sets.len()).collect();
    for epoch in 1..=config.epochs {
        let alpha1 = config.loss.alpha1_schedule.at(epoch - 1, config.epochs);
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch_sets: Vec<&FeatureSet> = chunk.iter().map(|&i| train_sets[i]).collect();
            let batch = BatchGraph::from_features(&batch_sets)?;
            let mut tape = Tape::new();
            let vars = params.register(&mut tape, true);
            let out = forward(&mut tape, &params, &vars, &batch, Mode::Train, Some(&mut dropout_rng))?;
            let y = tape.constant(batch.labels.clone().expect("training sets carry labels"));
            let data = adaptive_loss(&mut tape, out.logits, y, alpha1, &config.loss)?;
            let reg = l2_penalty(&mut tape, &params.penalized(&vars), config.loss.lambda)?;
            let loss = tape.add(data, reg)?;
            let value = tape.value(loss).data()[0];
            if !value.is_finite() {
                let rows: Vec<String> = chunk.iter().map(|&i| train[i].row.to_string()).collect();
                return Err(Error::Numeric(format!(
                    "loss is {value} at epoch {epoch}, batch {b} (data rows {})",
                    rows.join(", ")
                )));
            }
            tape.backward(loss)?;
            let grads: Vec<Tensor> = vars.iter().map(|&v| tape.grad_or_zeros(v)).collect();
            adam.step(&mut params.tensors, &grads, &names)?;
            for (running, stats) in params.running.iter_mut().zip(&out.batch_stats) {
                running.update(stats, model_config.batch_norm_momentum);
            }
            total += value * chunk.len() as f64;
        }
        let evaluate_now = config.eval_every > 0
            && !test_sets.is_empty()
            && (epoch % config.eval_every == 0 || epoch == config.epochs);
        let metrics = if evaluate_now {
            let r = report_on(&params, &test_sets, &vocab, config.threshold, config.batch_size)?;
            if let Some(a) = r.mean_auroc {
                if best.as_ref().is_none_or(|(b, _)| a > *b) {
                    best = Some((a, checkpoint(&params, &adam, epoch)));
                }
            }
            Some(EpochMetrics {
                mean_auroc: r.mean_auroc,
                macro_f1: r.macro_f1,
                micro_f1: r.micro_f1,
            })
        } else {
            None
        };
        let entry = EpochLog {
            epoch,
            alpha1,
            train_loss: total / train_sets.len() as f64,
            metrics,
        };
        log::info!("epoch {epoch}: loss {:.6}, alpha1 {alpha1:.3}", entry.train_loss);
        on_epoch(&entry)?;
        log.push(entry);
    }
    let test_report = if test_sets.is_empty() {
        None
    } else {
        Some(report_on(&params, &test_sets, &vocab, config.threshold, config.batch_size)?)
    };
    Ok(TrainOutcome {
        final_checkpoint: checkpoint(&params, &adam, config.epochs),
        best_checkpoint: best.map(|(_, c)| c),
        log,
        train_indices: train_idx,
        test_indices: test_idx,
        test_report,
    })
}

/// Inference-mode metrics of a checkpoint on labeled records.
pub fn evaluate(checkpoint: &Checkpoint, records: &[DatasetRecord], threshold: f64) -> Result<MetricReport, Error> {
    if records.is_empty() {
        return Err(DataError::Invalid("cannot evaluate an empty dataset".into()).into());
    }
    let vocab = &checkpoint.vocabulary;
    let unknown = vocab.unknown(records);
    if !unknown.is_empty() {
        return Err(DataError::UnknownLabels(unknown).into());
    }
    let sets = featurize_records(&checkpoint.featurizer, records, Some(vocab))?;
    report_on(&checkpoint.params, &sets, vocab, threshold, 64)
}

/// Descriptor probabilities for one molecule, highest first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub smiles: String,
    pub scores: Vec<(String, f64)>,
}

/// Outcome for one input line.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionLine {
    /// 1-based input line.
    pub line: usize,
    pub result: Result<Prediction, ChemError>,
}

/// Predicts every input. Lines that fail to parse are reported and the rest
/// still run. Ties keep vocabulary order; `top_k` truncates each list.
pub fn predict(checkpoint: &Checkpoint, inputs: &[&str], top_k: Option<usize>) -> Result<Vec<PredictionLine>, Error> {
    let parsed: Vec<Result<_, ChemError>> = inputs.iter().map(|s| checkpoint.featurizer.parse(s)).collect();
    let graphs: Vec<_> = parsed.iter().filter_map(|p| p.as_ref().ok()).collect();
    let sets: Vec<FeatureSet> = graphs.par_iter().map(|g| checkpoint.featurizer.featurize(g)).collect();
    let probs = if sets.is_empty() {
        Tensor::zeros(&[0, checkpoint.vocabulary.len()])
    } else {
        predict_sets(&checkpoint.params, &sets, 64)?
    };
    let names = checkpoint.vocabulary.names();
    let mut row = 0;
    let mut out = Vec::with_capacity(inputs.len());
    for (i, (text, p)) in inputs.iter().zip(parsed).enumerate() {
        let result = p.map(|_| {
            let mut scores: Vec<(String, f64)> = names.iter().cloned().zip(probs.row(row).iter().copied()).collect();
            row += 1;
            scores.sort_by(|a, b| b.1.total_cmp(&a.1));
            if let Some(k) = top_k {
                scores.truncate(k);
            }
            Prediction {
                smiles: text.trim().to_string(),
                scores,
            }
        });
        out.push(PredictionLine { line: i + 1, result });
    }
    Ok(out)
}
