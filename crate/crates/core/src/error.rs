use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {required} samples required, {available} available")]
    InsufficientData { required: u64, available: u64 },

    /// The regime learner ran out of samples in the middle of a test.
    #[error(
        "stream exhausted during regime test {failed_lambda} \
         (last completed test: {last_completed}, samples used: {samples_used})"
    )]
    StreamExhausted {
        failed_lambda: u32,
        last_completed: u32,
        samples_used: u64,
        required: u64,
    },

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),
}
