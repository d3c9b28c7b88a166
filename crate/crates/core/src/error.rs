use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("infinite energy: points {i} and {j} coincide")]
    CoincidentPoints { i: usize, j: usize },

    #[error("point {index} is not on the set (distance {distance:e})")]
    OffSet { index: usize, distance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("IFS symbol {symbol} out of range for {p} maps")]
    SymbolOutOfRange { symbol: usize, p: usize },

    #[error("insufficient depth {depth} for N = {n}: value changed from {shallow} to {deep} at depth {deeper}")]
    InsufficientDepth {
        n: usize,
        depth: u32,
        deeper: u32,
        shallow: String,
        deep: String,
    },

    #[error("separation hypothesis fails for k = {k} (delta_k = {delta_k} >= gap {gap}); smallest valid k is {smallest_valid}")]
    HypothesisFailure {
        k: usize,
        delta_k: String,
        gap: String,
        smallest_valid: usize,
    },

    #[error("exact identity violated at m = {m}: {detail}")]
    IdentityViolated { m: u32, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
