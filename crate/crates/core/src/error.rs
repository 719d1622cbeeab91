use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("backend mismatch: exact and tolerant values cannot be combined")]
    BackendMismatch,
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("non-finite float {0} cannot be stored")]
    NonFinite(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero element in operand set for {0}")]
    ZeroElement(&'static str),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("collision collapse: {0}")]
    Collapse(String),
    #[error("empty support: {0}")]
    EmptySupport(&'static str),
    #[error("exponent k must be >= 1, got {0}")]
    ExponentTooSmall(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("set too small: {0}")]
    TooSmall(String),
    #[error("refinement rule broke its cardinality guarantee at step {step}: kept {kept} of {size}")]
    RuleViolation { step: usize, kept: usize, size: usize },
    #[error("iteration did not terminate within {0} steps")]
    NonTermination(u64),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("side condition violated: {0}")]
    SideCondition(String),
    #[error("tolerant backend rejected: {0}")]
    TolerantRejected(&'static str),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
