use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrbsError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {message} (achieved residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    #[error("sample too small: need at least {required} rows, got {actual}")]
    SampleTooSmall { required: usize, actual: usize },

    #[error(
        "optimizer did not converge after {iterations} iterations \
         (best profile log-likelihood {best_value})"
    )]
    NonConvergence {
        iterations: usize,
        best_value: f64,
        best_eta: [f64; 4],
    },

    #[error("interval unavailable: {0}")]
    IntervalUnavailable(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl BrbsError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BrbsError::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, residual: f64) -> Self {
        BrbsError::Numerical {
            message: msg.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, BrbsError>;
