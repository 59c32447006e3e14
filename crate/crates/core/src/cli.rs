//! Command-line interface. Exit codes: 0 success, 1 usage or configuration
//! error, 2 data error, 3 numeric failure.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::data::{load_dataset_with, DatasetStats, LabelPolicy};
use crate::error::{DataError, Error};
use crate::featurize::{FeatureConfig, FeatureSet, Featurizer};
use crate::metrics::{MetricReport, DEFAULT_THRESHOLD};
use crate::train::{featurize_records, predict, train_observed, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "odorgat", version, about = "Odor descriptor prediction with graph attention networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a `smiles,labels` CSV and write checkpoints and logs to a directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// JSON training configuration; unknown keys are errors.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report metrics of a checkpoint on a labeled CSV.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Print the full report as JSON instead of the summary table.
        #[arg(long)]
        json: bool,
    },
    /// Predict descriptor probabilities for SMILES, one per line (`-` reads stdin).
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Write features of every molecule in a CSV.
    Featurize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Training configuration whose feature settings to use.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Labels-per-molecule histogram and descriptor frequencies.
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| DataError::io(path, e).into()
}

fn stdout_err(e: std::io::Error) -> Error {
    DataError::io(Path::new("<stdout>"), e).into()
}

fn read_config(path: &Path) -> Result<TrainConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    TrainConfig::from_json(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(DataError::from)?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Table header and row in the layout of the published comparison.
pub fn summary_table(method: &str, report: &MetricReport) -> String {
    format!(
        "| Method | AUROC | F1 score |\n|---|---|---|\n{}\nmicro F1 {:.4}, molecules {}, labels scored {}/{}\n",
        report.table_row(method),
        report.micro_f1,
        report.samples,
        report.labels.len() - report.skipped_labels.len(),
        report.labels.len()
    )
}

/// Runs one command, writing results to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Error> {
    match command {
        Command::Train { data, config, out: dir, seed } => {
            let mut config = read_config(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            config.validate()?;
            let featurizer = Featurizer::new(config.features.clone())?;
            let dataset = load_dataset_with(&data, LabelPolicy::Required, featurizer.elements())?;
            std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            write_json(&dir.join("rejected.json"), &dataset.rejections)?;
            let log_path = dir.join("epochs.jsonl");
            let mut log = BufWriter::new(File::create(&log_path).map_err(io_err(&log_path))?);
            let outcome = train_observed(&config, &dataset.records, |entry| {
                let line = serde_json::to_string(entry).map_err(DataError::from)?;
                writeln!(log, "{line}").and_then(|_| log.flush()).map_err(io_err(&log_path))
            })?;
            outcome.final_checkpoint.save(&dir.join("final.ckpt"))?;
            if let Some(best) = &outcome.best_checkpoint {
                best.save(&dir.join("best.ckpt"))?;
            }
            write_json(&dir.join("config.json"), &config)?;
            if let Some(report) = &outcome.test_report {
                write_json(&dir.join("test_metrics.json"), report)?;
                out.write_all(summary_table("odorgat", report).as_bytes()).map_err(stdout_err)?;
            }
            writeln!(
                out,
                "trained {} epochs on {} molecules ({} held out, {} rows rejected); outputs in {}",
                config.epochs,
                outcome.train_indices.len(),
                outcome.test_indices.len(),
                dataset.rejections.len(),
                dir.display()
            )
            .map_err(stdout_err)?;
            Ok(0)
        }
        Command::Eval {
            checkpoint,
            data,
            threshold,
            json,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let dataset = load_dataset_with(&data, LabelPolicy::Required, ck.featurizer.elements())?;
            let report = crate::train::evaluate(&ck, &dataset.records, threshold)?;
            let text = if json {
                serde_json::to_string_pretty(&report).map_err(DataError::from)? + "\n"
            } else {
                summary_table("odorgat", &report)
            };
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
            Ok(0)
        }
        Command::Predict {
            checkpoint,
            input,
            top_k,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let lines = read_lines(&input)?;
            let inputs: Vec<(usize, &str)> = lines
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| (i + 1, l.as_str()))
                .collect();
            let texts: Vec<&str> = inputs.iter().map(|(_, l)| *l).collect();
            let results = predict(&ck, &texts, top_k)?;
            let mut failures = 0;
            for ((line, _), r) in inputs.iter().zip(results) {
                let value = match r.result {
                    Ok(p) => serde_json::json!({"line": line, "smiles": p.smiles, "predictions": p.scores}),
                    Err(e) => {
                        failures += 1;
                        eprintln!("line {line}: {e}");
                        serde_json::json!({"line": line, "error": e.to_string()})
                    }
                };
                writeln!(out, "{value}").map_err(stdout_err)?;
            }
            Ok(if failures > 0 { 2 } else { 0 })
        }
        Command::Featurize {
            data,
            out: path,
            format,
            config,
        } => {
            let features = match config {
                Some(p) => read_config(&p)?.features,
                None => FeatureConfig::default(),
            };
            let featurizer = Featurizer::new(features)?;
            let dataset = load_dataset_with(&data, LabelPolicy::Optional, featurizer.elements())?;
            let sets = featurize_records(&featurizer, &dataset.records, None)?;
            let file = File::create(&path).map_err(io_err(&path))?;
            let mut w = BufWriter::new(file);
            match format {
                Format::Json => write_features_json(&mut w, &dataset.records, &sets),
                Format::Csv => write_features_csv(&mut w, &dataset.records, &sets, featurizer.global_dim()),
            }?;
            w.flush().map_err(io_err(&path))?;
            writeln!(
                out,
                "featurized {} molecules ({} rows rejected) into {}",
                sets.len(),
                dataset.rejections.len(),
                path.display()
            )
            .map_err(stdout_err)?;
            Ok(0)
        }
        Command::Stats { data, json } => {
            let dataset = load_dataset_with(&data, LabelPolicy::Optional, crate::chem::ElementTable::builtin())?;
            let stats = DatasetStats::compute(&dataset.records);
            let text = if json {
                serde_json::to_string_pretty(&stats).map_err(DataError::from)? + "\n"
            } else {
                stats.to_table()
            };
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
            Ok(0)
        }
    }
}

fn read_lines(input: &str) -> Result<Vec<String>, Error> {
    let reader: Box<dyn BufRead> = if input == "-" {
        Box::new(BufReader::new(std::io::stdin()))
    } else {
        let path = Path::new(input);
        Box::new(BufReader::new(File::open(path).map_err(io_err(path))?))
    };
    reader
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| DataError::io(Path::new(input), e).into())
}

#[derive(Serialize)]
struct FeatureRow<'a> {
    row: usize,
    smiles: &'a str,
    labels: &'a [String],
    features: &'a FeatureSet,
}

fn write_features_json(
    w: &mut dyn Write,
    records: &[crate::data::DatasetRecord],
    sets: &[FeatureSet],
) -> Result<(), Error> {
    let rows: Vec<FeatureRow> = records
        .iter()
        .zip(sets)
        .map(|(r, s)| FeatureRow {
            row: r.row,
            smiles: &r.smiles,
            labels: &r.labels,
            features: s,
        })
        .collect();
    serde_json::to_writer(&mut *w, &rows).map_err(DataError::from)?;
    Ok(())
}

/// One line per molecule: row, SMILES, atom and bond counts, then the
/// molecule-level vector.
fn write_features_csv(
    w: &mut dyn Write,
    records: &[crate::data::DatasetRecord],
    sets: &[FeatureSet],
    global_dim: usize,
) -> Result<(), Error> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["row".to_string(), "smiles".into(), "atoms".into(), "bonds".into()];
    header.extend((0..global_dim).map(|i| format!("g{i}")));
    csv.write_record(&header).map_err(DataError::from)?;
    for (r, s) in records.iter().zip(sets) {
        let mut fields = vec![
            r.row.to_string(),
            r.smiles.clone(),
            s.atom_count().to_string(),
            (s.edge_count() / 2).to_string(),
        ];
        fields.extend(s.global_vector.iter().map(|v| v.to_string()));
        csv.write_record(&fields).map_err(DataError::from)?;
    }
    csv.flush().map_err(|e| DataError::io(Path::new("<features>"), e))?;
    Ok(())
}
