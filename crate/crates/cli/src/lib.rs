//! Experiment harness for discrete high-index saddle dynamics: config
//! ingestion, single runs, the three figure experiments, the condition-number
//! table and the verification battery.
//!
//! Exit codes: 0 success, 1 property failure, 2 configuration error,
//! 3 numerical failure or divergence.

use std::path::Path;

pub mod battery;
pub mod config;
pub mod experiments;
pub mod runner;

pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn property(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PROPERTY,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    /// Filesystem failures count as configuration errors: the output
    /// location is part of the run's configuration.
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        Self::config(e.to_string())
    }
}
