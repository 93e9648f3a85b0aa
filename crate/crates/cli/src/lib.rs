//! Command-line front end: JSON run configurations in, deterministic CSV out.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Failures surfaced to the shell. Exit code 1 for I/O, 2 for anything the
/// user can fix in the configuration or flags.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn invalid(field: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("invalid configuration at `{field}`: {reason}"))
    }

    /// Wraps a core error; domain errors carry no field, so `context` names one.
    pub fn from_core(err: desync_core::Error, context: &str) -> Self {
        match err {
            desync_core::Error::Config { .. } => CliError::Validation(err.to_string()),
            desync_core::Error::Domain(msg) => CliError::invalid(context, msg),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}
