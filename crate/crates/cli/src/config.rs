//! `--config` files: `key = value` lines whose keys are long flag names of
//! the chosen subcommand (`alpha = 0.9`, `out-dir = results`). Blank lines
//! and lines starting with `#` are ignored; a key may repeat for flags that
//! take several values. Values from the file are appended to the command
//! line only for flags the user did not pass, so the command line wins.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

use crate::CliError;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        out.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(out)
}

/// Follows the subcommand chain of `matches` through `cmd`.
fn leaf<'a>(mut cmd: &'a Command, mut matches: &'a ArgMatches) -> (&'a Command, &'a ArgMatches) {
    while let Some((name, sub)) = matches.subcommand() {
        match cmd.find_subcommand(name) {
            Some(c) => {
                cmd = c;
                matches = sub;
            }
            None => break,
        }
    }
    (cmd, matches)
}

/// The command line with defaults from `path` appended.
pub fn merge(
    args: Vec<OsString>,
    cmd: &Command,
    lenient: &ArgMatches,
    path: &Path,
) -> Result<Vec<OsString>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let entries = parse(&text)?;
    let (sub, matches) = leaf(cmd, lenient);
    let mut out = args;
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::Usage(format!("config key `{key}` is not a flag of `{}`", sub.get_name())))?;
        let id = arg.get_id().as_str();
        if matches!(matches.value_source(id), Some(ValueSource::CommandLine)) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(format!("--{key}={value}").into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => out.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                _ => return Err(CliError::Usage(format!("config key `{key}` expects true or false"))),
            }
        }
    }
    Ok(out)
}
