//! Library side of the `kmexp` command: data ingestion, reports and the
//! subcommand implementations, kept separate from argument parsing so they
//! can be driven from tests.

pub mod commands;
pub mod data;
pub mod report;

use std::process::ExitCode;

/// Failure of a command, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or configuration.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input file.
    #[error("{0}")]
    Parse(String),
    /// The data parsed but the computation cannot proceed.
    #[error(transparent)]
    Numerical(#[from] kmexp_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for usage, parse and I/O problems; 2 for numerical or degenerate data.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Numerical(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
