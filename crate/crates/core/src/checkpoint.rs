//! Single-file model checkpoints.
//!
//! Layout: the 8-byte magic `ODORGAT\0`, a little-endian `u64` header length,
//! a JSON header, then every array as raw little-endian `f64` values. The
//! header holds the configs, the label vocabulary, the element, pattern and
//! MACCS tables as text, and a manifest giving each array's name, shape and
//! byte offset from the start of the array section.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chem::ElementTable;
use crate::data::LabelVocabulary;
use crate::error::{DataError, Error};
use crate::featurize::{FeatureConfig, Featurizer, MaccsKeys, PatternSet};
use crate::model::{ModelConfig, ModelParams, RunningStats};
use crate::tensor::{AdamConfig, AdamState, Tensor};

pub const MAGIC: &[u8; 8] = b"ODORGAT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    /// Completed training epochs.
    pub epoch: usize,
    pub params: ModelParams,
    pub featurizer: Featurizer,
    pub vocabulary: LabelVocabulary,
    pub optimizer: Option<AdamState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset within the array section.
    pub offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tables {
    elements: String,
    functional_groups: String,
    maccs_keys: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerHeader {
    config: AdamConfig,
    step: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    epoch: usize,
    model: ModelConfig,
    features: FeatureConfig,
    vocabulary: LabelVocabulary,
    tables: Tables,
    optimizer: Option<OptimizerHeader>,
    arrays: Vec<ArrayEntry>,
}

fn bad(message: impl Into<String>) -> Error {
    DataError::Checkpoint(message.into()).into()
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>, Error> {
        let mut arrays: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        for (spec, t) in self.params.layout.specs.iter().zip(&self.params.tensors) {
            arrays.push((spec.name.clone(), t.shape().to_vec(), t.data()));
        }
        for (l, r) in self.params.running.iter().enumerate() {
            arrays.push((format!("running{l}.mean"), vec![r.mean.len()], &r.mean));
            arrays.push((format!("running{l}.var"), vec![r.var.len()], &r.var));
        }
        if let Some(opt) = &self.optimizer {
            for (spec, (m, v)) in self
                .params
                .layout
                .specs
                .iter()
                .zip(opt.first_moment.iter().zip(&opt.second_moment))
            {
                arrays.push((format!("adam.m.{}", spec.name), spec.shape.clone(), m));
                arrays.push((format!("adam.v.{}", spec.name), spec.shape.clone(), v));
            }
        }
        let mut offset = 0u64;
        let manifest = arrays
            .iter()
            .map(|(name, shape, data)| {
                let e = ArrayEntry {
                    name: name.clone(),
                    shape: shape.clone(),
                    offset,
                };
                offset += 8 * data.len() as u64;
                e
            })
            .collect();
        let f = &self.featurizer;
        let header = Header {
            format_version: FORMAT_VERSION,
            epoch: self.epoch,
            model: self.params.config.clone(),
            features: f.config().clone(),
            vocabulary: self.vocabulary.clone(),
            tables: Tables {
                elements: f.elements().source().to_string(),
                functional_groups: f.patterns().source().to_string(),
                maccs_keys: f.maccs().source().to_string(),
            },
            optimizer: self.optimizer.as_ref().map(|o| OptimizerHeader {
                config: o.config,
                step: o.step,
            }),
            arrays: manifest,
        };
        let json = serde_json::to_vec(&header).map_err(DataError::from)?;
        let mut out = Vec::with_capacity(16 + json.len() + offset as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, _, data) in &arrays {
            for v in data.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, Error> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16usize.saturating_add(len)).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(DataError::from)?;
        if header.format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", header.format_version)));
        }
        let section = &bytes[16 + len..];
        let read = |name: &str, shape: &[usize]| -> Result<Vec<f64>, Error> {
            let entry = header
                .arrays
                .iter()
                .find(|e| e.name == name)
                .ok_or_else(|| bad(format!("missing array `{name}`")))?;
            if entry.shape != shape {
                return Err(bad(format!("array `{name}` has shape {:?}, expected {shape:?}", entry.shape)));
            }
            let n: usize = shape.iter().product();
            let start = entry.offset as usize;
            let raw = section
                .get(start..start + 8 * n)
                .ok_or_else(|| bad(format!("array `{name}` runs past the end of the file")))?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };

        let layout = crate::model::ParamLayout::new(&header.model);
        let mut tensors = Vec::with_capacity(layout.len());
        for spec in &layout.specs {
            tensors.push(Tensor::new(spec.shape.clone(), read(&spec.name, &spec.shape)?)?);
        }
        let mut running = Vec::new();
        for (l, shape) in header.model.layers().iter().enumerate() {
            let w = [shape.output()];
            running.push(RunningStats {
                mean: read(&format!("running{l}.mean"), &w)?,
                var: read(&format!("running{l}.var"), &w)?,
            });
        }
        let optimizer = match &header.optimizer {
            Some(o) => {
                let mut first = Vec::new();
                let mut second = Vec::new();
                for spec in &layout.specs {
                    first.push(read(&format!("adam.m.{}", spec.name), &spec.shape)?);
                    second.push(read(&format!("adam.v.{}", spec.name), &spec.shape)?);
                }
                Some(AdamState {
                    config: o.config,
                    step: o.step,
                    first_moment: first,
                    second_moment: second,
                })
            }
            None => None,
        };
        let params = ModelParams::from_parts(header.model, tensors, running)?;
        let featurizer = Featurizer::from_parts(
            header.features,
            ElementTable::parse(&header.tables.elements)?,
            PatternSet::parse(&header.tables.functional_groups)?,
            MaccsKeys::parse(&header.tables.maccs_keys)?,
        )?;
        params.config.check_inputs(&featurizer)?;
        if params.config.label_count != header.vocabulary.len() {
            return Err(bad(format!(
                "model has {} outputs but the vocabulary lists {} labels",
                params.config.label_count,
                header.vocabulary.len()
            )));
        }
        Ok(Checkpoint {
            epoch: header.epoch,
            params,
            featurizer,
            vocabulary: header.vocabulary,
            optimizer,
        })
    }

    /// Writes through a temporary file so a crash never leaves a half file.
    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("partial");
        let write = || -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        };
        write().map_err(|e| DataError::io(path, e).into())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, Error> {
        let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}
