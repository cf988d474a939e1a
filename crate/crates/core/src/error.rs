use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("not estimable: {0}")]
    NotEstimable(String),

    #[error("cannot collapse: {0}")]
    CannotCollapse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pseudo-stratum {group} has zero sample variance; merge it with a neighbour")]
    ZeroVariancePseudoStratum { group: usize },

    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    /// The estimator is defined but cannot be evaluated on this input
    /// (reported as `NA`).
    #[error("not available: {0}")]
    NotAvailable(String),

    #[error("insufficient groups: {0}")]
    InsufficientGroups(String),

    #[error("degenerate pseudo-stratum {group}: {reason}")]
    DegenerateGroup { group: usize, reason: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("stratum '{stratum}' has inconsistent x values ({first} vs {other})")]
    InconsistentKey {
        stratum: String,
        first: f64,
        other: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
