use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),

    #[error("authentication rejected by endpoint {endpoint} (HTTP {status})")]
    AuthFailed { endpoint: String, status: u16 },

    #[error("judge reply could not be parsed: {0}")]
    JudgeFormat(String),

    #[error("{0} is undefined for these inputs")]
    Undefined(&'static str),

    #[error("combinatorial budget exceeded: C({n},{k}) = {count} subsets")]
    Budget { n: usize, k: usize, count: u128 },

    #[error("exact Shapley supports at most {max} agents, got {got}")]
    TooManyAgents { max: usize, got: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("transport error: {0}")]
    Transport(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Errors that must stop a whole run rather than mark a single trial.
    pub fn is_abort(&self) -> bool {
        matches!(self, Error::AuthFailed { .. } | Error::MissingCredential(_) | Error::Config(_))
    }
}
