use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// PN requires p1 > 0; the caller decides whether to drop or report.
    #[error("probability of necessary causation is undefined: {0}")]
    PnUndefined(String),

    #[error("probability of sufficient causation is undefined: {0}")]
    PsUndefined(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("no threshold exceedances: {0}")]
    EmptyExceedances(String),

    #[error("degenerate threshold: {0}")]
    DegenerateThreshold(String),

    #[error("fit failed at site {site}: {reason}")]
    SiteFit { site: String, reason: String },

    #[error("model error: {0}")]
    Model(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    /// Every cluster of a run failed.
    #[error("all clusters failed: {0}")]
    AllClustersFailed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("input error in {path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("schema error at row {row}: {message}")]
    Schema { row: usize, message: String },

    /// The two worlds do not cover the same sites.
    #[error("site sets are misaligned: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
