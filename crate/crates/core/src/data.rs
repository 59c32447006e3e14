//! Dataset files, label vocabularies, splitting and label statistics.
//!
//! A dataset is a UTF-8 CSV with header `smiles,labels`, where `labels` holds
//! `;`-separated descriptor names:
//!
//! ```text
//! smiles,labels
//! CCO,alcoholic;sweet
//! CC(=O)OCC,fruity
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::{parse_smiles_with, ElementTable, MolecularGraph};
use crate::error::{DataError, Error};
use crate::tensor::Tensor;

/// One accepted row.
#[derive(Debug, Clone)]
pub struct DatasetRecord {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub smiles: String,
    /// Descriptor names in file order, duplicates removed.
    pub labels: Vec<String>,
    pub graph: MolecularGraph,
}

/// A row that was not loaded and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub row: usize,
    pub reason: String,
}

/// Whether rows without labels are acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPolicy {
    Required,
    Optional,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub rejections: Vec<Rejection>,
    /// Data rows read, accepted or not.
    pub total_rows: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Reads a dataset file, parsing SMILES with the built-in element table.
pub fn load_dataset(path: &Path, policy: LabelPolicy) -> Result<Dataset, Error> {
    load_dataset_with(path, policy, ElementTable::builtin())
}

pub fn load_dataset_with(path: &Path, policy: LabelPolicy, elements: &ElementTable) -> Result<Dataset, Error> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let data = read_dataset(file, policy, elements).map_err(|e| match e {
        Error::Data(DataError::Format { line, message, .. }) => Error::Data(DataError::Format {
            what: path.display().to_string(),
            line,
            message,
        }),
        other => other,
    })?;
    for r in &data.rejections {
        log::warn!("{}: row {} rejected: {}", path.display(), r.row, r.reason);
    }
    log::info!(
        "{}: {} of {} rows accepted",
        path.display(),
        data.records.len(),
        data.total_rows
    );
    Ok(data)
}

/// Parses dataset CSV text from any reader.
pub fn read_dataset<R: Read>(reader: R, policy: LabelPolicy, elements: &ElementTable) -> Result<Dataset, Error> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = csv.headers().map_err(DataError::from)?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["smiles", "labels"] {
        return Err(DataError::Format {
            what: "dataset".into(),
            line: 1,
            message: format!("header must be `smiles,labels`, found `{}`", header.join(",")),
        }
        .into());
    }
    let mut data = Dataset::default();
    for (i, row) in csv.records().enumerate() {
        let row_number = i + 1;
        data.total_rows += 1;
        let reject = |reason: String| Rejection {
            row: row_number,
            reason,
        };
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                data.rejections.push(reject(format!("unreadable row: {e}")));
                continue;
            }
        };
        if row.len() != 2 {
            data.rejections
                .push(reject(format!("expected 2 fields, found {}", row.len())));
            continue;
        }
        let smiles = row[0].trim();
        let labels = split_labels(&row[1]);
        if policy == LabelPolicy::Required && labels.is_empty() {
            data.rejections.push(reject("no labels".into()));
            continue;
        }
        match parse_smiles_with(smiles, elements) {
            Ok(graph) => data.records.push(DatasetRecord {
                row: row_number,
                smiles: smiles.to_string(),
                labels,
                graph,
            }),
            Err(e) => data.rejections.push(reject(e.to_string())),
        }
    }
    Ok(data)
}

/// Splits a `;`-separated label field, trimming names and dropping blanks
/// and repeats.
pub fn split_labels(field: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    field
        .split(';')
        .map(str::trim)
        .filter(|l| !l.is_empty() && seen.insert(*l))
        .map(String::from)
        .collect()
}

/// Ordered descriptor names; a name's position is its output column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    /// Fails on repeated names.
    pub fn new(names: Vec<String>) -> Result<LabelVocabulary, DataError> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(DataError::Invalid(format!("label `{n}` listed twice in vocabulary")));
            }
        }
        Ok(LabelVocabulary { names, index })
    }

    /// Every label in `records`, sorted by name.
    pub fn from_records(records: &[DatasetRecord]) -> LabelVocabulary {
        let names: BTreeSet<&str> = records.iter().flat_map(|r| r.labels.iter().map(String::as_str)).collect();
        LabelVocabulary::new(names.into_iter().map(String::from).collect()).expect("set has no repeats")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Labels of `records` that this vocabulary lacks, sorted.
    pub fn unknown(&self, records: &[DatasetRecord]) -> Vec<String> {
        let missing: BTreeSet<&String> = records
            .iter()
            .flat_map(|r| &r.labels)
            .filter(|l| !self.index.contains_key(l.as_str()))
            .collect();
        missing.into_iter().cloned().collect()
    }

    /// Multi-hot row for one label list.
    pub fn encode(&self, labels: &[String]) -> Result<Vec<f64>, DataError> {
        let mut row = vec![0.0; self.len()];
        let mut unknown = Vec::new();
        for l in labels {
            match self.index_of(l) {
                Some(i) => row[i] = 1.0,
                None => unknown.push(l.clone()),
            }
        }
        if unknown.is_empty() {
            Ok(row)
        } else {
            Err(DataError::UnknownLabels(unknown))
        }
    }

    /// `records × labels` target matrix; lists every unknown label on failure.
    pub fn encode_records(&self, records: &[DatasetRecord]) -> Result<Tensor, DataError> {
        let unknown = self.unknown(records);
        if !unknown.is_empty() {
            return Err(DataError::UnknownLabels(unknown));
        }
        let mut data = Vec::with_capacity(records.len() * self.len());
        for r in records {
            data.extend(self.encode(&r.labels)?);
        }
        Ok(Tensor::matrix(records.len(), self.len(), data))
    }
}

impl TryFrom<Vec<String>> for LabelVocabulary {
    type Error = DataError;

    fn try_from(names: Vec<String>) -> Result<Self, DataError> {
        LabelVocabulary::new(names)
    }
}

impl From<LabelVocabulary> for Vec<String> {
    fn from(v: LabelVocabulary) -> Vec<String> {
        v.names
    }
}

/// Shuffled train/test index partition of `0..n`.
///
/// The first `round(n · fraction)` shuffled indices (kept within `1..n`) form
/// the training side.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), Error> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    if n < 2 {
        return Err(DataError::Invalid(format!("cannot split {n} record(s); need at least 2")).into());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let test = order.split_off(cut);
    Ok((order, test))
}

/// Seeded shuffle then prefix split; see [`split_indices`].
pub fn split_dataset<T: Clone>(records: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), Error> {
    let (train, test) = split_indices(records.len(), fraction, seed)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| records[i].clone()).collect();
    Ok((pick(train), pick(test)))
}

/// Label-density summary of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub molecules: usize,
    pub distinct_labels: usize,
    /// Labels per molecule → number of molecules.
    pub labels_per_molecule: BTreeMap<usize, usize>,
    /// Descriptor → molecules carrying it.
    pub label_frequencies: BTreeMap<String, usize>,
    /// Share of molecules with 1 to 6 labels; 0 for an empty dataset.
    pub fraction_one_to_six: f64,
    pub mean_labels: f64,
}

impl DatasetStats {
    pub fn compute(records: &[DatasetRecord]) -> DatasetStats {
        let mut histogram = BTreeMap::new();
        let mut frequencies = BTreeMap::new();
        let mut total_labels = 0;
        for r in records {
            *histogram.entry(r.labels.len()).or_insert(0) += 1;
            total_labels += r.labels.len();
            for l in &r.labels {
                *frequencies.entry(l.clone()).or_insert(0) += 1;
            }
        }
        let n = records.len();
        let one_to_six: usize = histogram.range(1..=6).map(|(_, c)| c).sum();
        let ratio = |a: usize| if n == 0 { 0.0 } else { a as f64 / n as f64 };
        DatasetStats {
            molecules: n,
            distinct_labels: frequencies.len(),
            labels_per_molecule: histogram,
            label_frequencies: frequencies,
            fraction_one_to_six: ratio(one_to_six),
            mean_labels: ratio(total_labels),
        }
    }

    /// Aligned text tables: the histogram, then descriptors by falling support.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "molecules            {}", self.molecules);
        let _ = writeln!(out, "distinct labels      {}", self.distinct_labels);
        let _ = writeln!(out, "mean labels          {:.4}", self.mean_labels);
        let _ = writeln!(out, "fraction 1-6 labels  {:.4}", self.fraction_one_to_six);
        let _ = writeln!(out, "\n{:>7}  {:>9}", "labels", "molecules");
        for (k, v) in &self.labels_per_molecule {
            let _ = writeln!(out, "{k:>7}  {v:>9}");
        }
        let mut freq: Vec<(&String, &usize)> = self.label_frequencies.iter().collect();
        freq.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let width = freq.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("descriptor".len());
        let _ = writeln!(out, "\n{:<width$}  {:>9}", "descriptor", "molecules");
        for (name, count) in freq {
            let _ = writeln!(out, "{name:<width$}  {count:>9}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, policy: LabelPolicy) -> Dataset {
        read_dataset(text.as_bytes(), policy, ElementTable::builtin()).unwrap()
    }

    #[test]
    fn loads_rows_and_logs_rejections() {
        let d = read(
            "smiles,labels\nCCO,alcoholic;sweet\nC1CC,fruity\nCC,\nc1ccccc1,aromatic; sweet ;aromatic\n,x\n",
            LabelPolicy::Required,
        );
        assert_eq!(d.total_rows, 5);
        assert_eq!(d.records.len() + d.rejections.len(), 5);
        assert_eq!(d.records[0].labels, ["alcoholic", "sweet"]);
        assert_eq!(d.records[1].labels, ["aromatic", "sweet"]);
        assert_eq!(d.rejections[0].row, 2);
        assert!(d.rejections[0].reason.contains("unbalanced ring closure"), "{:?}", d.rejections);
        assert_eq!(d.rejections[1], Rejection { row: 3, reason: "no labels".into() });
        assert_eq!(d.rejections[2].reason, "empty input");
    }

    #[test]
    fn optional_labels_keep_unlabeled_rows() {
        let d = read("smiles,labels\nCC,\n", LabelPolicy::Optional);
        assert_eq!(d.records.len(), 1);
        assert!(d.records[0].labels.is_empty());
    }

    #[test]
    fn bad_header_and_field_count() {
        let err = read_dataset("smi,lab\nC,x\n".as_bytes(), LabelPolicy::Required, ElementTable::builtin());
        assert!(err.unwrap_err().to_string().contains("header"));
        let d = read("smiles,labels\nC,x,y\n", LabelPolicy::Required);
        assert_eq!(d.rejections[0].reason, "expected 2 fields, found 3");
    }

    #[test]
    fn vocabulary_encodes_and_reports_unknowns() {
        let d = read("smiles,labels\nCCO,sweet;alcoholic\nCC,waxy\n", LabelPolicy::Required);
        let vocab = LabelVocabulary::from_records(&d.records);
        assert_eq!(vocab.names(), ["alcoholic", "sweet", "waxy"]);
        let y = vocab.encode_records(&d.records).unwrap();
        assert_eq!(y.data(), &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let small = LabelVocabulary::new(vec!["sweet".into()]).unwrap();
        match small.encode_records(&d.records) {
            Err(DataError::UnknownLabels(l)) => assert_eq!(l, ["alcoholic", "waxy"]),
            other => panic!("{other:?}"),
        }
        assert!(LabelVocabulary::new(vec!["a".into(), "a".into()]).is_err());
        let json = serde_json::to_string(&vocab).unwrap();
        assert_eq!(serde_json::from_str::<LabelVocabulary>(&json).unwrap(), vocab);
    }

    #[test]
    fn split_examples() {
        let items: Vec<usize> = (0..10).collect();
        let (train, test) = split_dataset(&items, 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(split_dataset(&items, 0.8, 3).unwrap(), (train.clone(), test.clone()));
        let mut all: Vec<usize> = train.into_iter().chain(test).collect();
        all.sort_unstable();
        assert_eq!(all, items);
        assert!(split_dataset(&items[..1], 0.8, 0).is_err());
        assert!(split_dataset(&items, 1.0, 0).is_err());
        let big: Vec<usize> = (0..5788).collect();
        assert_ne!(split_dataset(&big, 0.8, 1).unwrap(), split_dataset(&big, 0.8, 2).unwrap());
    }

    #[test]
    fn stats_examples() {
        let d = read("smiles,labels\nCCO,a;b\nCC,a;b;c\n", LabelPolicy::Required);
        let s = DatasetStats::compute(&d.records);
        assert_eq!(s.labels_per_molecule, BTreeMap::from([(2, 1), (3, 1)]));
        assert_eq!(s.label_frequencies["a"], 2);
        assert_eq!(s.fraction_one_to_six, 1.0);
        assert!(s.to_table().contains("fraction 1-6 labels  1.0000"));
        let empty = DatasetStats::compute(&[]);
        assert!(empty.labels_per_molecule.is_empty());
        assert_eq!((empty.molecules, empty.fraction_one_to_six), (0, 0.0));
    }
}
