use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a unit: {0}")]
    NotUnit(String),
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient window margin: {0}")]
    Margin(String),
    #[error("overlapping tiles: {0}")]
    Overlap(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("exact arithmetic required: {0}")]
    ExactRequired(String),
    #[error("cannot decode cluster {index}: {reason}")]
    Decode {
        index: usize,
        reason: String,
        points: Vec<(f64, f64)>,
    },
    #[error("{0}")]
    NotFound(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
