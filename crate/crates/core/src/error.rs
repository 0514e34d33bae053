use thiserror::Error;

/// Failure classes shared by every module. The CLI maps each class to a fixed exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("budget exceeded: {what} (limit {limit})")]
    BudgetExceeded { what: String, limit: u64 },
    #[error("solver failure: {message} (best bracket [{lower:e}, {upper:e}])")]
    SolverFailure { message: String, lower: f64, upper: f64 },
    #[error("normalization failure: achieved sandwich ratio {ratio}, limit {limit}")]
    NormalizationFailure { ratio: f64, limit: f64 },
    #[error("resolution failure: {0}")]
    ResolutionFailure(String),
    #[error("gamma cap exceeded: search needed distance ratio {required}, cap {cap}")]
    GammaCapExceeded { required: f64, cap: f64 },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
