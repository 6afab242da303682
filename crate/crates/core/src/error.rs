use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution parameters for {family}: {reason}")]
    InvalidParams { family: &'static str, reason: String },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("invalid quantile constraint: {0}")]
    Constraint(String),

    #[error("fit failed for {family}: best residual {best_residual:.3e} after {restarts} restarts")]
    FitFailure {
        family: &'static str,
        best_residual: f64,
        restarts: usize,
    },

    #[error("invalid correlation matrix: {0}")]
    Correlation(#[from] CorrelationError),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("combiner failed at draw {index} (inputs {inputs:?}; {count} failing draws in total): {error}")]
    DrawFailed {
        index: usize,
        inputs: Vec<f64>,
        count: usize,
        error: EvalError,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("{excluded} of {trials} coverage trials failed to fit (limit 1%)")]
    TooManyExclusions { excluded: usize, trials: usize },
}

impl Error {
    /// True for failures of the numerical machinery (fitting, correlation
    /// structure, per-draw evaluation) as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FitFailure { .. }
                | Error::Correlation(_)
                | Error::DrawFailed { .. }
                | Error::Eval(_)
                | Error::TooManyExclusions { .. }
        )
    }
}

/// First violated invariant of a candidate correlation matrix.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelationError {
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("entry ({0},{1}) is not finite")]
    NonFinite(usize, usize),
    #[error("matrix is not symmetric at ({0},{1})")]
    Asymmetric(usize, usize),
    #[error("diagonal not unit at ({0},{0}): {1}")]
    DiagonalNotUnit(usize, f64),
    #[error("off-diagonal entry ({0},{1}) = {2} outside [-1, 1]")]
    OutOfRange(usize, usize, f64),
    #[error("not positive semi-definite: minimum eigenvalue {0:.3e}")]
    NotPsd(f64),
}
