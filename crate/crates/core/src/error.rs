//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, configuration validation and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its allowed range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A CSV cell could not be parsed as a number.
    #[error("non-numeric cell at row {row}, column {column}")]
    NonNumericCell { row: usize, column: String },

    /// A requested response column does not exist.
    #[error("y column {0:?} not found")]
    YColumnNotFound(String),

    /// Fewer than two observations.
    #[error("n < 2: need at least two observations, got {0}")]
    TooFewRows(usize),

    /// A covariate column has zero variance and cannot be standardized.
    #[error("constant column {0:?}: standard deviation is zero")]
    ConstantColumn(String),

    /// The solver produced non-finite iterates.
    #[error("solver diverged: {0}")]
    Diverged(String),

    /// An error raised while fitting one point of a regularization path.
    #[error("path fit failed at lambda index {index} (lambda = {lambda}): {source}")]
    PathFit {
        index: usize,
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    /// Nothing to fit: the null model is optimal for every lambda.
    #[error("null model everywhere; nothing to fit (lambda_max = 0)")]
    NullModel,

    /// Invariant violation inside the crate. Seeing this is a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
