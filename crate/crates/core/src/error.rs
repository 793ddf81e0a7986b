use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),

    #[error("power exponent must be at least 1")]
    EmptyPower,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cost matrix is not square ({rows} rows, row {row} has {cols} entries)")]
    NonSquare { rows: usize, row: usize, cols: usize },

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("group/element kind mismatch: {0}")]
    KindMismatch(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("point is {distance:e} away from the embedded submanifold (tolerance {tolerance:e})")]
    OffManifold { distance: f64, tolerance: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("atom count {atoms} at level {level} exceeds cap {cap}")]
    AtomCapExceeded { level: usize, atoms: usize, cap: usize },

    #[error("invalid Markov chain: {0}")]
    InvalidChain(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
