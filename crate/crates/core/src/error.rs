use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two jump times coincide; configurations must be simple.
    #[error("duplicate jump time {time} at positions {first} and {second}")]
    DuplicateJump {
        time: f64,
        first: usize,
        second: usize,
    },

    #[error("jump times not increasing: {previous} followed by {next} at position {index}")]
    NotIncreasing {
        previous: f64,
        next: f64,
        index: usize,
    },

    #[error("history contains time {event} which is not strictly before {t}")]
    PredictabilityViolation { event: f64, t: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numeric failure: {message} (achieved tolerance {achieved:e})")]
    NumericFailure { message: String, achieved: f64 },

    #[error("non-finite log intensity at time {time}")]
    NonFiniteLog { time: f64 },

    #[error("root bracket not found below {limit} for target {target}")]
    HorizonExceeded { target: f64, limit: f64 },

    #[error("explosion while solving jump {k}: {reason}")]
    Explosion { k: usize, reason: String },

    #[error("event cap of {cap} exceeded")]
    BudgetExceeded { cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("effective sample size {ess:.1} below floor {floor:.1}")]
    UnreliableWeights { ess: f64, floor: f64 },

    #[error("contraction ≥ 1 (constant {constant}): strong uniqueness not guaranteed")]
    ContractionViolated { constant: f64 },

    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },

    #[error("{path} (line {line}): {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
