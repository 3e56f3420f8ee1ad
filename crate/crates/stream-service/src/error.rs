use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Eval(#[from] evalkit::EvalError),
    #[error(transparent)]
    Policy(#[from] policy::PolicyError),
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("cannot load {path}: {message}")]
    Artifact { path: String, message: String },
    #[error("session has stopped")]
    Closed,
    #[error(transparent)]
    Io(std::io::Error),
}

impl From<harbor_env::EnvError> for ServiceError {
    fn from(e: harbor_env::EnvError) -> Self {
        ServiceError::Eval(e.into())
    }
}
