use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action component {name} = {value} outside [{min}, {max}]")]
    RangeViolation {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid vessel model: {0}")]
    Model(String),
    #[error("invalid harbor geometry: {0}")]
    Geometry(String),
    #[error("invalid reward parameters: {0}")]
    Reward(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
