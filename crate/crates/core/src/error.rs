use thiserror::Error;

/// Errors raised anywhere in the fitting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (leading minor {minor} is non-positive)")]
    NotPositiveDefinite { minor: usize },

    #[error("matrix has a negative eigenvalue {value:e} beyond tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid canonical point: Delta' Sigma^-1 Delta = {quad} must be < 1")]
    InvalidCanonical { quad: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("row {row} has no observed cells")]
    FullyMissingRow { row: usize },

    #[error("row {row} has zero density under every component")]
    UnrepresentableRow { row: usize },

    #[error("cluster {cluster} is degenerate (effective size {size:.3} <= dimension {p})")]
    DegenerateCluster { cluster: usize, size: f64, p: usize },

    #[error("location/skewness system is singular for cluster {cluster} (BC - A^2 = {det:e})")]
    SingularSystem { cluster: usize, det: f64 },

    #[error("k-means produced an empty cluster after {attempts} reseeds")]
    EmptyCluster { attempts: usize },

    #[error("all {0} starts failed: {1}")]
    FitFailed(usize, String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
