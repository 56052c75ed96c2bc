use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by all stages of the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is rank deficient (smallest eigenvalue {smallest:.3e} <= threshold {threshold:.3e})")]
    RankDeficient { smallest: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("not enough samples: {n_samples} samples for {m_channels} channels")]
    InsufficientSamples { n_samples: usize, m_channels: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid range ({lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("weighted least squares design is singular (condition estimate {condition:.3e})")]
    SingularDesign { condition: f64 },

    #[error("input is not whitened: max |cov - I| = {deviation:.3e}")]
    NotWhitened { deviation: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
