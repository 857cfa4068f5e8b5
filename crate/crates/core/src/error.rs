use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid recurrence vector: {0}")]
    InvalidRecurrence(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("string is not a satisfying representation")]
    NotSatisfying,
    #[error("cannot carry into position {pos}: coefficient {at} is below the recurrence entry")]
    CarryBlocked { pos: usize, at: usize },
    #[error("cannot borrow from position {0}: coefficient is zero")]
    BorrowBlocked(usize),
    #[error("string is not end complete")]
    NotEndComplete,
    #[error("string is not a nearly satisfying representation")]
    NotNsr,
    #[error("operation requires a weakly decreasing recurrence vector")]
    NotWeaklyDecreasing,
    #[error("normalization did not terminate: {0}")]
    NonTermination(String),
    #[error("index {n} outside the domain (need n >= {min})")]
    DomainError { n: i64, min: i64 },
    #[error("enumeration size {size} exceeds cap {cap}")]
    CapExceeded { size: String, cap: u64 },
    #[error("oracle search exceeded {0} nodes")]
    OracleExhausted(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("coefficient overflow")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, Error>;
