use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Raised when an online forecast is requested before the warmup period has elapsed.
    #[error("warmup: {history} weeks of history, forecasting starts at {warmup}")]
    Warmup { history: usize, warmup: usize },

    #[error("search space too large: {states} states exceeds limit {limit}")]
    SearchSpaceTooLarge { states: u128, limit: u128 },

    #[error("horizon: scenario has {available} weeks but {requested} were requested")]
    Horizon { requested: usize, available: usize },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("unknown stream: {0}")]
    UnknownStream(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
