use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration over {n} workers exceeds the cap of {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("unmapped label values: {}", .0.join(", "))]
    UnmappedLabels(Vec<String>),

    #[error("gold labels reference unknown tasks: {}", .0.join(", "))]
    UnknownGoldTasks(Vec<String>),

    #[error(
        "only {0} workers remain after filtering; at least 3 informative workers are needed to identify reliabilities"
    )]
    NotIdentifiable(usize),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error("write failed: {0}")]
    Write(String),
}

impl Error {
    pub(crate) fn write(e: impl std::fmt::Display) -> Self {
        Error::Write(e.to_string())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
