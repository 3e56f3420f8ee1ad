//! Where a black-box controller comes from.

use policy::{BaselineController, BaselineGains, MlpPolicy, Policy};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::EvalError;

/// `baseline`, `baseline:<gains.json>` or `mlp:<weights file>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySource {
    Baseline {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gains: Option<PathBuf>,
    },
    Mlp {
        weights: PathBuf,
    },
}

impl PolicySource {
    pub fn load(&self) -> Result<Box<dyn Policy>, EvalError> {
        Ok(match self {
            PolicySource::Baseline { gains: None } => Box::new(BaselineController::default()),
            PolicySource::Baseline { gains: Some(p) } => {
                let g = BaselineGains::load(p).map_err(|e| file_error(p, e))?;
                Box::new(BaselineController::new(g)?)
            }
            PolicySource::Mlp { weights } => Box::new(MlpPolicy::load(weights).map_err(|e| file_error(weights, e))?),
        })
    }
}

fn file_error(path: &std::path::Path, e: policy::PolicyError) -> EvalError {
    match e {
        policy::PolicyError::Io(source) => EvalError::Io {
            path: path.display().to_string(),
            source,
        },
        other => EvalError::Format {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    }
}

impl FromStr for PolicySource {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "baseline" => Ok(PolicySource::Baseline { gains: None }),
            Some(("baseline", p)) if !p.is_empty() => Ok(PolicySource::Baseline {
                gains: Some(PathBuf::from(p)),
            }),
            Some(("mlp", p)) if !p.is_empty() => Ok(PolicySource::Mlp {
                weights: PathBuf::from(p),
            }),
            _ => Err(EvalError::Config(format!(
                "unknown policy '{s}': expected baseline, baseline:<gains.json> or mlp:<weights>"
            ))),
        }
    }
}

impl fmt::Display for PolicySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySource::Baseline { gains: None } => write!(f, "baseline"),
            PolicySource::Baseline { gains: Some(p) } => write!(f, "baseline:{}", p.display()),
            PolicySource::Mlp { weights } => write!(f, "mlp:{}", weights.display()),
        }
    }
}
