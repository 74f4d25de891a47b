use std::path::PathBuf;
use thiserror::Error;

/// CLI failure modes, each mapped to a distinct exit code:
/// 2 for configuration/parse problems, 3 for solver failures, 4 for I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("ragged row in {path}: line {line} has {got} fields, expected {expected}")]
    RaggedRows {
        path: PathBuf,
        line: u64,
        got: usize,
        expected: usize,
    },
    #[error("bad response values: {0}")]
    BadResponseValues(String),
    #[error("solver failure: {0}")]
    Solver(#[from] bgm_core::BgmError),
    #[error("simulation failure: {0}")]
    Sim(#[from] bgm_core::sim::SimError),
    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::Parse { .. }
            | CliError::RaggedRows { .. }
            | CliError::BadResponseValues(_) => 2,
            CliError::Solver(_) | CliError::Sim(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}
