use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error(transparent)]
    Model(#[from] pumpfield::Error),

    #[error("{failed} of {total} nodes failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadConfig { .. } | CliError::Parse(_) | CliError::Config(_) => 2,
            // parameters the model itself rejects are range errors too
            CliError::Range(_) | CliError::Model(pumpfield::Error::InvalidParameter { .. }) => 3,
            CliError::TooManyFailures { .. } => 4,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::ReadConfig { .. } => "read-config",
            CliError::Parse(_) => "config-parse",
            CliError::Config(_) => "config",
            CliError::Range(_) => "range",
            CliError::Model(_) => "model",
            CliError::TooManyFailures { .. } => "node-failures",
            CliError::Validation(_) => "validation",
            CliError::Write { .. } => "write",
            CliError::Threads(_) => "threads",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}

/// Machine-readable form of a failed run.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub exit_code: i32,
    pub message: String,
}
