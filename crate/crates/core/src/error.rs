use thiserror::Error;

/// Errors surfaced by the library. Cap violations are ordinary errors, never
/// panics, so a sweep can skip an oversized cell and keep going.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid distortion measure: {0}")]
    InvalidDistortion(String),

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no epsilon-typical type at n={n}, epsilon={epsilon}")]
    EmptyTypicalSet { n: usize, epsilon: f64 },

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("message (bin={bin}, cipher={cipher}) has zero probability under this codebook")]
    ZeroProbabilityMessage { bin: u64, cipher: u64 },

    #[error("manifest parse error: {0}")]
    ManifestParse(String),

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
