//! Error type shared across the solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not idempotent")]
    NotIdempotent,

    #[error("idempotent is stable, it has no unstable pair to decompose")]
    StableIdempotent,

    #[error("unknown capacity letter `{0}`")]
    UnknownLetter(String),

    #[error("token flow horizon {got} does not match word length {expected}")]
    HorizonMismatch { expected: usize, got: usize },

    #[error("requested flow value {requested} exceeds the maximal flow {max}")]
    InfeasibleValue { requested: u64, max: u64 },

    #[error("configurations must have equal token counts ({left} vs {right})")]
    ConfigSumMismatch { left: u64, right: u64 },

    #[error("the edge set of a fair query must be nonempty")]
    EmptyEdgeSet,

    #[error("closure exceeded the element limit of {0}")]
    ClosureLimitExceeded(usize),

    #[error("malformed expression: {0}")]
    MalformedExpression(String),

    #[error("search value {0} is too large for the configuration search")]
    ValueOutOfRange(num_bigint::BigUint),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),
}
