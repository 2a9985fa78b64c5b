use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid ring: L = {sites}, d = {d} (need L >= 1, d >= 2)")]
    InvalidRing { sites: usize, d: usize },

    #[error("{what}: dimension {dim} exceeds the limit {limit}")]
    DimensionGuard {
        what: &'static str,
        dim: u128,
        limit: u128,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not a valid density matrix: {0}")]
    NotDensity(String),

    #[error("integration became unstable at t = {t}: trace drift {drift:e}")]
    Unstable { t: f64, drift: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
