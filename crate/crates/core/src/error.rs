use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("allocation matrix is singular (condition number {condition:.3e}); fault pattern cannot be allocated")]
    SingularAllocation { condition: f64 },

    #[error("scenario failed at t = {time:.4} s: {source}")]
    ScenarioFailed {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("vehicle state diverged at t = {time:.4} s")]
    Diverged { time: f64 },

    #[error("time {time} s outside trajectory range [0, {duration}] s")]
    TimeOutOfRange { time: f64, duration: f64 },

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("cannot compare runs: {0}")]
    Compare(String),

    #[error("malformed series file: {0}")]
    Series(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
