//! Experiment orchestration: TOML configuration, line-oriented run records,
//! deterministic parallel execution, and merge tooling for sharded runs.

pub mod config;
pub mod records;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("record error: {0}")]
    Record(String),
    #[error("config hash mismatch: {0} vs {1}")]
    HashMismatch(String, String),
    #[error("duplicate realization index {0}")]
    IndexCollision(u64),
    #[error(transparent)]
    Operator(#[from] crate::operator::OperatorError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
