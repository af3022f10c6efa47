use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("budget exceeded: {what} needs {needed}, limit {limit}")]
    BudgetExceeded {
        what: String,
        needed: u64,
        limit: u64,
    },
    #[error("forced outcome {forced} contradicts deterministic value {actual}")]
    ForcedOutcomeConflict { forced: i8, actual: i8 },
    #[error("tracked logical {0} anticommutes with a measurement that has no repairing generator")]
    LogicalMeasured(String),
    #[error("logical not expressible in the current round: {0}")]
    LogicalNotExpressible(String),
    #[error("odd defect count {0}")]
    OddDefects(usize),
    #[error("no crossing found: {0}")]
    NoCrossing(String),
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
