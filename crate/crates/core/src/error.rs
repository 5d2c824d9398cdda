use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("privacy profile is empty")]
    EmptyProfile,
    #[error("privacy level at index {index} must be strictly positive, got {value}")]
    NonPositiveEpsilon { index: usize, value: f64 },
    #[error("sample at index {index} lies outside [-0.5, 0.5]: {value}")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("weights sum to zero")]
    ZeroWeights,
    #[error("Laplace scale must be nonnegative, got {0}")]
    NegativeScale(f64),
    #[error("{method} does not support infinite privacy levels")]
    InfiniteEpsilonUnsupported { method: &'static str },
    #[error("instance too large for brute force: n = {n} exceeds {max}")]
    TooLarge { n: usize, max: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("granted privacy {granted} exceeds requested {requested} for user {index}")]
    PrivacyViolation {
        index: usize,
        granted: f64,
        requested: f64,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
