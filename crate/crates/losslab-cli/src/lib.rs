//! Experiment harness behind the `losslab` binary: configuration files,
//! experiment records with lossless on-disk round-trips, double-descent
//! sweeps and the pinned histogram recipes.

pub mod config;
pub mod record;
pub mod recipes;
pub mod run;
pub mod sweeps;

use std::fmt;

/// Harness error split by exit code: domain/config problems exit 1,
/// filesystem problems exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Domain(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Domain(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<losslab::Error> for CliError {
    fn from(e: losslab::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
