use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum XyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("realization index {index} out of range (ensemble has {realizations})")]
    IndexOutOfRange { index: u64, realizations: u64 },

    #[error("eigensolver failed on a {dim}x{dim} matrix (norm {norm:.3e}): {detail}")]
    Eigensolver { dim: usize, norm: f64, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("numerical tolerance exceeded: {what} = {value:.3e} > {tol:.1e}")]
    Tolerance { what: String, value: f64, tol: f64 },

    #[error("hilbert space too large: n = {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("realization {index}: {source}")]
    Realization {
        index: u64,
        #[source]
        source: Box<XyError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, XyError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(XyError::InvalidInput(msg.into()))
}
