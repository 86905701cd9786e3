use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for size {size}")]
    OutOfRange { index: usize, size: usize },

    #[error("index {0} listed more than once")]
    Duplicate(usize),

    #[error("mate {mate} was already processed as a swap source")]
    InvalidMate { mate: usize },

    #[error("not a permutation: {0}")]
    NotBijection(String),

    #[error("invalid bad-event: {0}")]
    InvalidEvent(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("no weight for event {0}")]
    MissingWeight(u64),

    #[error("weight for event {id} is not a finite nonnegative number: {value}")]
    InvalidWeight { id: u64, value: f64 },

    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("sufficient condition fails: {0}")]
    CriterionFailed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
