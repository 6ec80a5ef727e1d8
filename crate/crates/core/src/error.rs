use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("outcome {0} is outside the support")]
    OutOfSupport(String),

    #[error("support violation: {0} has positive mass on the left but zero mass on the right")]
    SupportViolation(String),

    #[error("width mismatch: {0}")]
    WidthMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid simulator: {0}")]
    InvalidSimulator(String),

    #[error("generator is not supported on the target: {0}")]
    NotSupported(String),

    #[error("distribution is not flat: {0}")]
    NotFlat(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration budget exceeded: family has {size} members, cap is {cap}")]
    BudgetExceeded { size: u128, cap: u128 },

    #[error("identity or inequality violated: {0}")]
    Violated(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
