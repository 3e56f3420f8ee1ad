//! `run-manifest.json`: what a run read, resolved, seeded and wrote.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const MANIFEST_FILE: &str = "run-manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub argv: Vec<String>,
    /// Fully resolved settings of the run.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_fingerprint: Option<String>,
    /// Input path -> SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    /// Output path -> SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

/// SHA-256 (hex) of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Output directory plus the manifest being filled in by a command.
pub struct Run {
    out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn new(out: &Path, command: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(out).map_err(|source| CliError::Io {
            path: out.display().to_string(),
            source,
        })?;
        Ok(Run {
            out: out.to_path_buf(),
            manifest: RunManifest {
                tool_version: evalkit::io::TOOL_VERSION.to_string(),
                command: command.to_string(),
                argv: std::env::args().collect(),
                config: serde_json::Value::Null,
                seeds: BTreeMap::new(),
                env_fingerprint: None,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
        })
    }

    /// Path of an artifact inside the output directory.
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Checks that an input exists and records its digest.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        if !path.is_file() {
            return Err(CliError::Missing(path.display().to_string()));
        }
        let digest = file_digest(path)?;
        self.manifest.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        let digest = file_digest(path)?;
        self.manifest.outputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        tracing::info!(name, seed, "seed");
        self.manifest.seeds.insert(name.to_string(), seed);
    }

    pub fn config<T: Serialize>(&mut self, config: &T) {
        self.manifest.config = serde_json::to_value(config).expect("config serializes");
    }

    pub fn env_fingerprint(&mut self, fp: String) {
        self.manifest.env_fingerprint = Some(fp);
    }

    /// Writes the manifest; returns its path.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let path = self.out.join(MANIFEST_FILE);
        evalkit::io::write_json(&path, &self.manifest)?;
        Ok(path)
    }
}
