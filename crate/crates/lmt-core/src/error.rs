use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmtError {
    #[error("invalid build config: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("build error: {0}")]
    Build(String),
    #[error("tree format version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u64 },
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
