//! Experiment driver for the time-scale Kalman filter library.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod plot;
pub mod scenarios;

use std::path::PathBuf;

use thiserror::Error;

pub use config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Divergence(String),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::OracleMismatch(_) => EXIT_ORACLE,
            CliError::Io { .. } | CliError::Other(_) => EXIT_OTHER,
        }
    }
}
