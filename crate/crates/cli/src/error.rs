//! CLI errors and their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] udk_core::Error),
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("experiment `{0}` failed its acceptance check")]
    ExperimentFailed(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for bad input, 3 when a size cap is hit, 4 when an experiment fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_budget() => 3,
            CliError::ExperimentFailed(_) => 4,
            _ => 2,
        }
    }

    /// True when stdout was closed early, as in `udk gen ... | head`.
    pub fn is_broken_pipe(&self) -> bool {
        let io = match self {
            CliError::Io(e) => Some(e),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            },
            _ => None,
        };
        io.is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
