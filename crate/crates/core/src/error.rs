use thiserror::Error;

/// Errors raised by the landscape laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("singular least-squares problem: {0}")]
    Singular(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("point ({phi1}, {phi2}) lies outside the fundamental square")]
    OutOfDomain { phi1: f64, phi2: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown benchmark problem id {0} (expected 1, 2 or 3)")]
    UnknownBenchmark(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
