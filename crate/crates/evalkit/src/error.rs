use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] harbor_env::EnvError),
    #[error(transparent)]
    Policy(#[from] policy::PolicyError),
    #[error(transparent)]
    Tree(#[from] lmt_core::LmtError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("no usable data: {0}")]
    Empty(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },
}
