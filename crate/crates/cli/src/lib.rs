//! Command-line front end: argument definitions, subcommands and SVG output.

pub mod args;
pub mod commands;
pub mod svg;

use std::fmt;
use std::io::Write;

pub use args::Cli;

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or values; exit code 2.
    Usage(String),
    /// Data, numeric or I/O failure; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dbcsp_core::Error> for CliError {
    fn from(e: dbcsp_core::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Runs a parsed command, writing console output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    commands::dispatch(cli.command, out)
}
