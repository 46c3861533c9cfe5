use thiserror::Error;

/// Errors raised while building or evaluating distortion models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MddError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {name} {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("input {0:?} lies on the boundary of the unit cube")]
    BoundaryInput(Vec<f64>),

    #[error("conditioning event has zero probability")]
    ConditioningEventNull,

    #[error("not a univariate distortion: {0}")]
    NotADistortion(String),

    #[error("arguments must be nondecreasing, got {0:?}")]
    UnorderedInput(Vec<f64>),

    #[error("inclusion-exclusion over {events} events exceeds the limit of {limit}")]
    TooManyEvents { events: usize, limit: usize },

    #[error("supports differ: {0}")]
    SupportMismatch(String),

    #[error("conditional distortion is not available: {0}")]
    ConditionalUnavailable(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },
}

impl MddError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        MddError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        MddError::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MddError>;
