use std::path::PathBuf;

/// Errors shared across the library.
///
/// Numerical routines return `NonFinite` or `Stationary` instead of silently
/// producing NaNs; configuration problems are reported before any iteration
/// runs; dataset parsing failures carry the offending line number.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector or matrix entry became NaN or infinite.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// An operation that divides by the gradient norm was called at a point
    /// with zero gradient.
    #[error("gradient is zero at the query point; feedback is undefined")]
    Stationary,

    /// Mismatched dimensions between an operator and its operand.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    /// Invalid run or learner configuration, detected before iterating.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An iterative estimator (e.g. power iteration) failed to converge.
    #[error("{what} did not converge within {iters} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: String,
        iters: usize,
        residual: f64,
    },

    /// Dataset file could not be read.
    #[error("cannot read dataset {path}: {source}")]
    DatasetIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Dataset file is malformed; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    DatasetParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Output file or directory could not be written.
    #[error("cannot write {path}: {source}")]
    OutputIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Generic I/O failure while emitting outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure for configs or summaries.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub(crate) fn dim(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::InvalidConfig(message.into())
    }
}
