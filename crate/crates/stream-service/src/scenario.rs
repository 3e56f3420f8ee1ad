//! What a live session runs: environment, start, controller and surrogate.

use evalkit::{Env, PolicySource, Start, TreePolicy};
use harbor_env::{Pose, Velocity};
use lmt_core::LmTree;
use policy::Policy;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::ServiceError;

fn default_speed() -> f64 {
    1.0
}

fn default_start() -> Start {
    Start {
        pose: Pose::new(150.0, 100.0, 2.0),
        velocity: Velocity::new(0.0, 0.0, 0.0),
    }
}

/// Scenario file contents. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub env: Env,
    #[serde(default = "default_start")]
    pub start: Start,
    pub policy: PolicySource,
    /// Surrogate tree JSON.
    pub tree: PathBuf,
    /// Simulated seconds per wall-clock second.
    #[serde(default = "default_speed")]
    pub realtime_factor: f64,
    /// Hold the episode at step 0 until a client sends `resume`.
    #[serde(default)]
    pub start_paused: bool,
    /// Directory served at `/` (the console bundle), if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(policy: PolicySource, tree: PathBuf) -> Self {
        ScenarioConfig {
            env: Env::default(),
            start: default_start(),
            policy,
            tree,
            realtime_factor: default_speed(),
            start_paused: false,
            static_dir: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let mut cfg: ScenarioConfig = evalkit::io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.tree);
        if let Some(d) = cfg.static_dir.as_mut() {
            resolve(d);
        }
        match &mut cfg.policy {
            PolicySource::Baseline { gains: Some(p) } => resolve(p),
            PolicySource::Mlp { weights } => resolve(weights),
            PolicySource::Baseline { gains: None } => {}
        }
        Ok(cfg)
    }
}

/// A scenario with every artifact loaded and checked.
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub controller: Box<dyn Policy>,
    pub surrogate: TreePolicy,
    pub tree_fingerprint: String,
}

impl LoadedScenario {
    /// Loads the controller and surrogate; any missing or invalid artifact is an error.
    pub fn load(config: ScenarioConfig) -> Result<Self, ServiceError> {
        config.env.validate()?;
        let controller = config.policy.load()?;
        let tree = LmTree::load(&config.tree).map_err(|e| ServiceError::Artifact {
            path: config.tree.display().to_string(),
            message: e.to_string(),
        })?;
        let tree_fingerprint = evalkit::io::fingerprint(&tree);
        if let Some(d) = &config.static_dir {
            if !d.is_dir() {
                return Err(ServiceError::Artifact {
                    path: d.display().to_string(),
                    message: "static directory does not exist".into(),
                });
            }
        }
        Ok(LoadedScenario {
            config,
            controller,
            surrogate: TreePolicy::new(tree),
            tree_fingerprint,
        })
    }

    /// What `GET /scenario` reports.
    pub fn info(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "controller": self.controller.name(),
            "surrogate": self.surrogate.name(),
            "tree_fingerprint": self.tree_fingerprint,
            "env_fingerprint": self.config.env.fingerprint(),
            "protocol_version": crate::protocol::PROTOCOL_VERSION,
            "tool_version": evalkit::io::TOOL_VERSION,
        })
    }
}
