use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("non-finite value at step {step}: {what}")]
    NonFinite { step: u64, what: String },
    #[error("{name} violated: {detail}")]
    Assumption { name: String, detail: String },
    #[error("smallness gate failed: {0}")]
    GateFailed(String),
    #[error("step budget exceeded: {0}")]
    StepBudget(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("consistency violation: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
