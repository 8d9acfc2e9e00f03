use std::io;
use std::path::{Path, PathBuf};

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("lineage mismatch: {what} was built from {found}, expected {expected}")]
    Lineage { what: String, expected: String, found: String },
    #[error(transparent)]
    Core(#[from] coldstart_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Parse { path: path.to_path_buf(), msg: msg.into() }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

/// Fails unless `found` equals `expected`.
pub fn check_lineage(what: &str, expected: &str, found: &str) -> CliResult<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CliError::Lineage { what: what.to_string(), expected: expected.to_string(), found: found.to_string() })
    }
}
