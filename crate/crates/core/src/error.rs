use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GrnnError>;

#[derive(Debug, Error)]
pub enum GrnnError {
    /// Shapes, stale caches, unknown node ids and incomplete tapes.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value at event {event}: {what}")]
    Numerical { event: usize, what: String },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("{path}:{line}: {msg}")]
    Ingestion { path: PathBuf, line: u64, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GrnnError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        GrnnError::Structural(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GrnnError::Io { path: path.into(), source }
    }

    /// Process exit code: 1 config, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            GrnnError::Config(_) | GrnnError::Parameter(_) | GrnnError::Json(_) => 1,
            GrnnError::Ingestion { .. } | GrnnError::Data(_) | GrnnError::Io { .. } => 2,
            GrnnError::Numerical { .. } | GrnnError::Evaluation(_) | GrnnError::Structural(_) => 3,
        }
    }
}
