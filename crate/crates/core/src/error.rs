use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("factorization rank must be at least 2, got {0}")]
    RankTooSmall(usize),

    #[error("matrix has no nonzero column")]
    NoColumns,

    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(&'static str),

    #[error("box lower bound exceeds upper bound at coordinate {index}")]
    InvalidBox { index: usize },

    #[error("linear program needs finite bounds on every coordinate")]
    UnboundedBox,

    #[error("simplex did not converge within {0} pivots")]
    PivotBudget(usize),

    #[error("simplex basis became singular after {0} pivots")]
    SingularBasis(usize),

    #[error("feasible set is empty")]
    InfeasiblePolytope,

    #[error("vertex enumeration over budget: {reason}")]
    BudgetExceeded { reason: String },

    #[error("invalid argument: {0}")]
    InvalidSpec(String),

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
