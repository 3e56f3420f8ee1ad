//! Artifact plumbing: JSON files, fingerprints and newline-delimited episodes.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::{Episode, EvalError, Outcome, Start, StepRecord};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 (hex) of the compact JSON encoding of `value`.
pub fn fingerprint<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn io_err(path: &Path, source: std::io::Error) -> EvalError {
    EvalError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> EvalError {
    EvalError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), EvalError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

/// First line of an episode file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub tool_version: String,
    pub controller: String,
    pub start: Start,
    pub h: f64,
    pub n_steps: usize,
    pub outcome: Outcome,
    pub cumulative_reward: f64,
}

/// Writes a header line followed by one JSON line per step.
pub fn write_episode<W: Write>(ep: &Episode, w: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(w);
    let header = EpisodeHeader {
        tool_version: TOOL_VERSION.to_string(),
        controller: ep.controller.clone(),
        start: ep.start,
        h: ep.h,
        n_steps: ep.steps.len(),
        outcome: ep.outcome,
        cumulative_reward: ep.cumulative_reward,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for s in &ep.steps {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_episode(ep: &Episode, path: &Path) -> Result<(), EvalError> {
    let f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_episode(ep, f).map_err(|e| io_err(path, e))
}

pub fn load_episode(path: &Path) -> Result<Episode, EvalError> {
    let f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let first = lines
        .next()
        .ok_or_else(|| format_err(path, "empty episode file"))?
        .map_err(|e| io_err(path, e))?;
    let header: EpisodeHeader = serde_json::from_str(&first).map_err(|e| format_err(path, e))?;
    let mut steps = Vec::with_capacity(header.n_steps);
    for line in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.is_empty() {
            continue;
        }
        let s: StepRecord = serde_json::from_str(&line).map_err(|e| format_err(path, e))?;
        steps.push(s);
    }
    if steps.len() != header.n_steps {
        return Err(format_err(
            path,
            format!("header promises {} steps, found {}", header.n_steps, steps.len()),
        ));
    }
    Ok(Episode {
        controller: header.controller,
        start: header.start,
        h: header.h,
        steps,
        outcome: header.outcome,
        cumulative_reward: header.cumulative_reward,
    })
}
