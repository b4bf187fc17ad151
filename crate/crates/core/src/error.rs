use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("objective TardyCount requires a due date per job")]
    MissingDueDates,

    #[error("due dates are only meaningful for the TardyCount objective")]
    UnexpectedDueDates,

    #[error("negative processing time {value} at job {job}, machine {machine}")]
    NegativeProcessingTime { job: usize, machine: usize, value: f64 },

    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("source matrix is constant; the affine fit is undefined")]
    DegenerateSource,

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("not a permutation matrix: {0}")]
    InvalidSolutionMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
