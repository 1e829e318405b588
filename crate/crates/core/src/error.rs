use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("unknown target column `{0}`")]
    UnknownColumn(String),

    #[error("target column `{0}` is categorical; a numeric target is required")]
    CategoricalTarget(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("bandwidth grid is empty")]
    EmptyGrid,

    #[error("invalid bandwidth grid: {0}")]
    InvalidGrid(String),

    #[error("category index {index} out of range for attribute `{attribute}` ({count} categories)")]
    CategoryOutOfRange {
        attribute: String,
        index: usize,
        count: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("zero variance in samples")]
    ZeroVariance,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
