use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("budget T={horizon} is too small for dimension {dim}: maximum depth would be 0")]
    BudgetTooSmall { horizon: usize, dim: usize },

    #[error("point {point:?} lies outside the decision domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
