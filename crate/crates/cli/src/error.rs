use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },

    #[error(transparent)]
    Core(#[from] sarv_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{count} malformed rows exceed the limit of {limit} (first at line {first_line})")]
    TooManyMalformed {
        count: usize,
        limit: usize,
        first_line: usize,
    },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage and configuration problems, 2 for bad data, 3 for numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::ConfigFile { .. } => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(sarv_core::Error::Config(_)) => 1,
            CliError::Core(_) | CliError::Io { .. } | CliError::TooManyMalformed { .. } => 2,
        }
    }
}
