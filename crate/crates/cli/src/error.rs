use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rhls::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("mesh hash mismatch: solution was computed on {expected}, rebuilt mesh hashes to {found}")]
    HashMismatch { expected: String, found: String },

    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use rhls::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidParameter(_)
                | E::OutsideDomain { .. }
                | E::BallNotContained { .. }
                | E::NonPositivePotential { .. }
                | E::NotStarShaped { .. } => 2,
                E::MeshMismatch { .. } | E::Format(_) | E::Io(_) => 3,
                E::NotConverged { .. } => 4,
            },
            CliError::Io { .. } | CliError::Json { .. } | CliError::HashMismatch { .. } => 3,
            CliError::NotConverged(_) => 4,
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub type CliResult<T> = std::result::Result<T, CliError>;
