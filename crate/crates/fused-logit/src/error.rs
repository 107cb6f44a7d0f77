use thiserror::Error;

/// Errors produced by solvers, data generation, and serialization.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of two arguments do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A configuration value is out of its admissible range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Input data violates a structural requirement (labels, intercept
    /// column, emptiness, non-finite entries).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A synthetic-data case spec is combinatorially impossible.
    #[error("infeasible case spec: {0}")]
    InfeasibleSpec(String),

    /// A matrix that must be positive definite could not be factorized,
    /// even after jitter.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// The objective or an iterate stopped being finite.
    #[error("numerical failure: {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed on-disk artifact (dataset, model file, instance dir).
    #[error("parse error: {0}")]
    Parse(String),

    /// Another error with where-it-happened context prepended.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps `self` with a location or grid-point description.
    pub fn with_context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
