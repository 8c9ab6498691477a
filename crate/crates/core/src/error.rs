use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("construction overflow at step {step}: removing {removed} from an interval of length {available}")]
    ConstructionOverflow {
        step: u32,
        removed: f64,
        available: f64,
    },

    #[error("value {value} outside the admissible range [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("bisection did not converge after {iterations} iterations")]
    BisectionFailed { iterations: u32 },

    #[error("numeric consistency check failed: {0}")]
    NumericConsistency(String),

    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),

    #[error("aliasing risk: {0}")]
    Aliasing(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("form is not Markovian at entry ({row}, {col}): {reason}")]
    NotMarkovian {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid construction error: {0}")]
    Grid(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
