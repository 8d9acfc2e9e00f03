//! `--config FILE`: `key = value` lines turned into command-line flags.
//!
//! The expanded flags are inserted directly after the subcommand name, ahead
//! of everything the user typed, and the parser lets a repeated flag override
//! an earlier one. Explicit flags therefore win over the file.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::format::read_text;

/// Parses `key = value` lines into flag arguments. Blank lines and lines
/// starting with `#` are skipped; `_` in keys becomes `-`. A value of `true`
/// yields a bare switch and `false` drops the key.
pub fn parse_config(text: &str, origin: &Path) -> CliResult<Vec<String>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::parse(origin, format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key.starts_with('-') {
            return Err(CliError::parse(origin, format!("line {}: bad key `{key}`", n + 1)));
        }
        if key == "config" {
            return Err(CliError::parse(origin, format!("line {}: config files cannot nest", n + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> CliResult<Option<OsString>> {
    let mut found = None;
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            found = Some(it.next().cloned().ok_or_else(|| CliError::config("--config needs a file"))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(OsString::from(p));
        }
    }
    Ok(found)
}

/// Splices the flags from `--config FILE` (if present) into `args`.
pub fn expand_args(args: Vec<OsString>, subcommands: &[String]) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let flags = parse_config(&read_text(path)?, path)?;
    let at = args
        .iter()
        .position(|a| subcommands.iter().any(|s| a.to_str() == Some(s.as_str())))
        .map_or(args.len(), |i| i + 1);
    let mut out = args;
    out.splice(at..at, flags.into_iter().map(OsString::from));
    Ok(out)
}
