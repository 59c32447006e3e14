use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures while reading SMILES or SMARTS text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown element symbol `{symbol}` at byte {offset}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("unbalanced ring closure {label} opened at byte {offset}")]
    UnbalancedRingClosure { label: u32, offset: usize },
    #[error("unbalanced parentheses at byte {offset}")]
    UnbalancedParentheses { offset: usize },
    #[error("valence violation on atom {atom} ({element}): {message}")]
    Valence {
        atom: usize,
        element: String,
        message: String,
    },
    #[error("aromaticity error on atom {atom}: {message}")]
    Aromaticity { atom: usize, message: String },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unsupported SMARTS primitive `{primitive}` at byte {offset}")]
    UnsupportedSmarts { primitive: String, offset: usize },
}

/// Failures reading data files, datasets and checkpoints.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}, line {line}: {message}")]
    Format {
        what: String,
        line: usize,
        message: String,
    },
    #[error("pattern `{name}`: {source}")]
    Pattern {
        name: String,
        #[source]
        source: ChemError,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("labels not in vocabulary: {}", .0.join(", "))]
    UnknownLabels(Vec<String>),
    #[error("{0}")]
    Invalid(String),
}

impl DataError {
    pub fn io(path: &Path, source: std::io::Error) -> DataError {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Failures inside the tensor engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: {message}")]
    Invalid { op: &'static str, message: String },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("backward already ran on this tape")]
    BackwardTwice,
    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// Process exit code for the command line: 2 for data problems, 3 for numeric ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Chem(_) | Error::Data(_) => 2,
            Error::Config(_) => 1,
            Error::Tensor(_) | Error::Numeric(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
