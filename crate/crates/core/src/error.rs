use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected:?} but found {found:?}")]
    Shape {
        op: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("{op}: non-finite value at index {index}")]
    NonFinite { op: &'static str, index: usize },

    #[error("target row {row} is not one-hot")]
    InvalidTarget { row: usize },

    #[error("sequence length for row {row} must be in [1, {max}], got {length}")]
    InvalidLength {
        row: usize,
        length: usize,
        max: usize,
    },

    #[error("gradient check: objective produced NaN at coordinate {index}")]
    GradCheckNan { index: usize },

    #[error("gradient of parameter `{param}` contains a non-finite value")]
    NonFiniteGradient { param: String },

    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("shard {path} is corrupt: expected hash {expected}, found {found}")]
    ShardHash {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("checkpoint does not match the model:\n{diff}")]
    CheckpointMismatch { diff: String },

    #[error("malformed checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that stem from numerics rather than inputs or configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::NonFiniteGradient { .. }
                | Error::NonFiniteLoss { .. }
                | Error::GradCheckNan { .. }
        )
    }
}
