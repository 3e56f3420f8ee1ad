use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("state vector contains non-finite values")]
    NonFiniteInput,
    #[error("weights shape error: {0}")]
    Shape(String),
    #[error("weights format error: {0}")]
    Format(String),
    #[error("invalid gains: {0}")]
    Gains(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
