use thiserror::Error;

/// Rejected run or protocol configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("resilience violated: need 3t+1 <= n, got n={n}, t={t}")]
    Resilience { n: usize, t: usize },
    #[error("party count {0} outside supported range [1, 128]")]
    PartyCount(usize),
    #[error("max_events must be positive")]
    ZeroEventCap,
    #[error("{count} corrupted parties exceed t={t}")]
    TooManyCorrupted { count: usize, t: usize },
    #[error("party index {index} out of range for n={n}")]
    PartyOutOfRange { index: usize, n: usize },
    #[error("shun budget total {total} must be below n^2={limit}")]
    BudgetTooLarge { total: u64, limit: u64 },
    #[error("invalid parameter: {0}")]
    Param(#[from] ParamError),
    #[error("{0}")]
    Other(String),
}

/// Out-of-range protocol parameter.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("epsilon must lie strictly between 0 and 1/2, got {0}")]
    Epsilon(String),
    #[error("fair choice requires m >= 3, got {0}")]
    ChoiceSize(usize),
    #[error("could not parse rational from {0:?}")]
    Rational(String),
    #[error("numeric evaluation inconclusive at {bits} bits: {what}")]
    Inconclusive { what: String, bits: u32 },
}

/// Reasons a single delivered message is dropped by a protocol state machine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("payload truncated")]
    Truncated,
    #[error("malformed payload: {0}")]
    Malformed(&'static str),
    #[error("unknown session path")]
    UnknownSession,
    #[error("unexpected sender {0}")]
    UnexpectedSender(String),
    #[error("duplicate send rejected")]
    DoubleSend,
    #[error("rejected: {0}")]
    Rejected(&'static str),
}
