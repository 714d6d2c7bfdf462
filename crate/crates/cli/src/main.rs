mod cli;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use cli::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] famsearch::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

const USAGE: u8 = 2;
const DATA: u8 = 3;
const NUMERIC: u8 = 4;

fn core_exit_code(e: &famsearch::Error) -> u8 {
    use famsearch::Error as E;
    match e {
        E::Member { source, .. } => core_exit_code(source),
        E::InvalidParameter(_) => USAGE,
        E::Degenerate(_) | E::EnumerationCap { .. } => NUMERIC,
        _ => DATA,
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => USAGE,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

/// Parses the command line, filling unset flags from `--config` if given.
fn parse(args: Vec<OsString>) -> Result<Cli, CliError> {
    let cmd = Cli::command();
    let lenient = cmd.clone().ignore_errors(true).try_get_matches_from(&args);
    let args = match lenient {
        Ok(m) => match m.get_one::<std::path::PathBuf>("config") {
            Some(path) => config::merge(args, &cmd, &m, path)?,
            None => args,
        },
        Err(_) => args,
    };
    let matches = cmd.try_get_matches_from(args).unwrap_or_else(|e| e.exit());
    Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let result = parse(std::env::args_os().collect()).and_then(commands::run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
