use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TasError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("invalid candidate antenna {0}: already selected or out of range")]
    InvalidCandidate(usize),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("exhaustive search refused: {subsets} subsets exceeds the limit of {limit}")]
    SearchTooLarge { subsets: u128, limit: u128 },
}

pub type Result<T> = std::result::Result<T, TasError>;
