use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error(transparent)]
    Model(#[from] commensurate_ssd::Error),
}

impl CliError {
    /// 1 numerical failure, 2 validation failure, 3 I/O failure.
    pub fn exit_code(&self) -> i32 {
        use commensurate_ssd::Error as E;
        match self {
            Self::Read { .. } | Self::Write { .. } => 3,
            Self::Parse { .. } | Self::Invalid(_) => 2,
            Self::Model(E::QuadratureNotConverged { .. } | E::Search(_)) => 1,
            Self::Model(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
