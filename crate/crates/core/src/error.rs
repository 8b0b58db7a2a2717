use thiserror::Error;

/// Errors raised by the core operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point left the domain of a Bregman generator (e.g. a zero entry under the entropy).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("not a descent direction: slope {slope:e} >= 0")]
    NonDescent { slope: f64 },

    /// Backtracking hit its cap. Carries the last trial so callers can diagnose it.
    #[error("linesearch failed after {backtracks} backtracks (last step {lambda:e}, trial f {f_trial:e}, f {f_old:e})")]
    LinesearchFailure {
        backtracks: usize,
        lambda: f64,
        f_trial: f64,
        f_old: f64,
    },

    #[error("inner subproblem solver stopped at residual {residual:e} after {iterations} steps")]
    InnerSolver { residual: f64, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
