use evalkit::EvalError;
use harbor_env::EnvError;
use lmt_core::LmtError;
use policy::PolicyError;
use stream_service::ServiceError;
use thiserror::Error;

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit status when the run itself failed (including unmet `eval --assert` thresholds).
pub const EXIT_FAILURE: u8 = 1;
/// Exit status for bad flags, missing inputs and invalid configuration files.
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("input file not found: {0}")]
    Missing(String),
    #[error("acceptance thresholds not met: {}", .0.join("; "))]
    Threshold(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tree(#[from] LmtError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

fn env_is_config(e: &EnvError) -> bool {
    !matches!(e, EnvError::Io { .. } | EnvError::RangeViolation { .. })
}

fn policy_is_config(e: &PolicyError) -> bool {
    matches!(e, PolicyError::Shape(_) | PolicyError::Format(_) | PolicyError::Gains(_))
}

fn tree_is_config(e: &LmtError) -> bool {
    matches!(
        e,
        LmtError::Config(_) | LmtError::Dataset(_) | LmtError::Version { .. } | LmtError::Malformed(_) | LmtError::Csv(_)
    )
}

fn eval_is_config(e: &EvalError) -> bool {
    match e {
        EvalError::Config(_) | EvalError::Usage(_) | EvalError::Format { .. } => true,
        EvalError::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
        EvalError::Env(e) => env_is_config(e),
        EvalError::Policy(e) => policy_is_config(e),
        EvalError::Tree(e) => tree_is_config(e),
        EvalError::Sampling(_) | EvalError::Empty(_) => false,
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let config = match self {
            CliError::Config(_) | CliError::Missing(_) => true,
            CliError::Threshold(_) | CliError::Io { .. } => false,
            CliError::Eval(e) => eval_is_config(e),
            CliError::Tree(e) => tree_is_config(e),
            CliError::Env(e) => env_is_config(e),
            CliError::Policy(e) => policy_is_config(e),
            CliError::Service(e) => match e {
                ServiceError::Config(_) | ServiceError::Artifact { .. } => true,
                ServiceError::Eval(e) => eval_is_config(e),
                ServiceError::Policy(e) => policy_is_config(e),
                ServiceError::Closed | ServiceError::Io(_) => false,
            },
        };
        if config {
            EXIT_CONFIG
        } else {
            EXIT_FAILURE
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Missing(_) => "missing_file",
            CliError::Threshold(_) => "threshold",
            CliError::Io { .. } => "io",
            CliError::Eval(_) => "eval",
            CliError::Tree(_) => "tree",
            CliError::Env(_) => "env",
            CliError::Policy(_) => "policy",
            CliError::Service(_) => "service",
        }
    }

    /// The error as one line of JSON for stderr.
    pub fn to_json(&self) -> String {
        let mut body = serde_json::json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Threshold(failed) = self {
            body["failed"] = serde_json::json!(failed);
        }
        serde_json::json!({ "error": body }).to_string()
    }
}
