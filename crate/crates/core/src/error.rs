use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count must be at least 1")]
    EmptyRegister,

    #[error("site {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("gate sites must be distinct, got ({0}, {0})")]
    CoincidentSites(usize),

    #[error("gate does not preserve the symplectic form")]
    NotSymplectic,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("tableau invariant violated: {0}")]
    BrokenInvariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("trajectory {index} (seed {seed}) failed: {reason}")]
    Trajectory {
        index: u64,
        seed: u64,
        reason: String,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("no overlap between curves in scaling variable")]
    NoOverlap,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
