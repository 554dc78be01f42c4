use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("zero matrix or vector where a nonzero one is required")]
    ZeroInput,

    #[error("matrix is not positive definite even after jitter")]
    Singular,

    #[error("infeasible dimensions: {0}")]
    Infeasible(String),

    /// Stacked equivalent channel of this BS has no right inverse.
    #[error("zero-forcing impossible at bs {bs}: stacked channel is rank deficient")]
    RankDeficient { bs: usize },

    #[error("power dual bisection failed at bs {bs}")]
    Bisection { bs: usize },

    #[error("codebook error: {0}")]
    Codebook(String),

    #[error("scheme {scheme} is incompatible with the scenario: {reason}")]
    Incompatible { scheme: String, reason: String },

    #[error("scheme {scheme} failed at snr {snr_db} dB, drop {drop}: {source}")]
    SchemeFailure {
        scheme: String,
        snr_db: f64,
        drop: u64,
        source: Box<Error>,
    },
}
