use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator and its front end.
#[derive(Debug, Error)]
pub enum Error {
    /// One or more configuration invariants are violated. Every violation
    /// found is listed, not only the first.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("bandwidth share requested for zero participants")]
    EmptyShare,

    #[error("participation cost is zero (alpha*rate + beta*data_size = 0)")]
    DegenerateCost,

    #[error("service quality undefined: every accuracy loss in the slot is zero")]
    UndefinedServiceQuality,

    #[error("fairness ratio undefined: server {server} has zero accumulated service quality")]
    UndefinedRatio { server: usize },

    #[error("fairness index undefined: every delegation ratio is zero")]
    UndefinedFairness,

    #[error("invalid type grid: {0}")]
    InvalidGrid(String),

    #[error("invalid delegation: {0}")]
    InvalidDelegation(String),

    #[error("unknown policy `{0}` (expected one of famus, random, greedy, ncf, ea, fixed)")]
    UnknownPolicy(String),

    #[error("{path}: refusing to overwrite existing file (pass --force)")]
    WouldOverwrite { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
