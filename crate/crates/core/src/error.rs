use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("labeling has a single class ({0} samples); both classes are required")]
    SingleClass(usize),

    #[error("class {class} has {count} samples, at least {required} required")]
    InsufficientClass {
        class: crate::Label,
        count: usize,
        required: usize,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("training failed: {0}")]
    Training(String),

    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("vocabulary hash mismatch: model expects {expected}, got {actual}")]
    VocabularyMismatch { expected: String, actual: String },

    #[error("leakage: issue `{0}` used for fitting also appears in the test set")]
    Leakage(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
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
