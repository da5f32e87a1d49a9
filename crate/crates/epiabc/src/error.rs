//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("initial susceptible count is non-positive ({s}); population too small or kappa too large")]
    NonPositiveSusceptible { s: f64 },

    #[error("invalid prior: lower bound >= upper bound at parameter index {index}")]
    InvalidPrior { index: usize },

    #[error("shape mismatch: {left} vs {right} entries")]
    ShapeMismatch { left: usize, right: usize },

    #[error("invalid run config: {0}")]
    InvalidConfig(String),

    #[error("max_runs ({runs}) reached with only {accepted} of {target} accepted samples")]
    MaxRunsExceeded {
        runs: u64,
        accepted: usize,
        target: usize,
        partial: Box<crate::abc::InferResult>,
    },

    #[error("country not found: {0}")]
    CountryNotFound(String),

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error("no day reaches the onset threshold of {threshold} confirmed cases")]
    OnsetNotReached { threshold: f64 },

    #[error("posterior sample file is empty")]
    EmptyPosterior,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config file error: {0}")]
    ConfigFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
