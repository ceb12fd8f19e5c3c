use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("neurons {source_label} -> {dest_label} are not joined by a weight: {reason}")]
    NotConnected {
        source_label: usize,
        dest_label: usize,
        reason: &'static str,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column}: cannot parse {field:?} as a number")]
    Parse {
        line: u64,
        column: usize,
        field: String,
    },

    #[error("class label {label} outside 1..={n}")]
    Label { label: i64, n: usize },

    #[error("pattern {index} has no class label")]
    Unlabeled { index: usize },

    #[error("column {column}: {reason}")]
    Transform { column: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
