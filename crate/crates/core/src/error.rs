use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("gain of user {user} on channel {channel} is not strictly positive ({value})")]
    NonPositiveGain {
        user: usize,
        channel: usize,
        value: f64,
    },
    #[error("rate target of user {user} is not strictly positive ({value})")]
    NonPositiveRate { user: usize, value: f64 },
    #[error("{users} users exceed {channels} channels")]
    TooManyUsers { users: usize, channels: usize },

    #[error("user {user} misses its rate target: {achieved} < {target}")]
    RateTargetMissed {
        user: usize,
        achieved: f64,
        target: f64,
    },
    #[error("channel {channel}: power {power} does not match rate {rate} (expected {expected})")]
    PowerRateMismatch {
        channel: usize,
        rate: f64,
        power: f64,
        expected: f64,
    },
    #[error("channel {channel} is unassigned but carries rate or power")]
    IdleChannelActive { channel: usize },
    #[error("channel {channel} is owned by unknown user {owner}")]
    UnknownOwner { channel: usize, owner: usize },
    #[error("channel {channel} carries a negative or non-finite value")]
    InvalidValue { channel: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("wrong structure: {0}")]
    WrongStructure(String),
    #[error("wrong rate model: {0}")]
    WrongModel(String),
    #[error("{channels} channels are not divisible by {users} users")]
    NotDivisible { users: usize, channels: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed CNF: {0}")]
    MalformedCnf(String),
    #[error("clause {clause} has {len} literals, expected 3")]
    NotThreeSat { clause: usize, len: usize },
    #[error("literal {literal} occurs {count} times, allowed 1..=3")]
    OccurrenceBoundViolated { literal: i64, count: usize },
}

impl Error {
    /// True for failures caused by malformed input rather than by the
    /// instance falling outside what a solver supports.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::NonPositiveGain { .. }
                | Error::NonPositiveRate { .. }
                | Error::TooManyUsers { .. }
                | Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::MalformedCnf(_)
                | Error::NotThreeSat { .. }
                | Error::OccurrenceBoundViolated { .. }
                | Error::RateTargetMissed { .. }
                | Error::PowerRateMismatch { .. }
                | Error::IdleChannelActive { .. }
                | Error::UnknownOwner { .. }
                | Error::InvalidValue { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
