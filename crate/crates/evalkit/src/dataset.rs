//! Training data from closed-loop runs of the black-box controller.

use lmt_core::{Dataset, FeatureStats, N_OUTPUTS};
use policy::{normalize, Policy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::{rollout, Env, Episode, EvalError, Outcome, Start};

/// Summary written next to a dataset: where the rows came from and the feature
/// statistics used for input standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub tool_version: String,
    pub policy: String,
    pub env_fingerprint: String,
    pub dataset_fingerprint: String,
    pub h: f64,
    pub n_episodes: usize,
    pub n_rows: usize,
    /// Episodes per outcome; diverged episodes contribute no rows.
    pub outcomes: BTreeMap<String, usize>,
    pub feature_stats: FeatureStats,
}

/// A dataset together with the episodes that produced it.
#[derive(Debug, Clone)]
pub struct DatasetBuild {
    pub data: Dataset,
    pub episodes: Vec<Episode>,
    pub sidecar: DatasetSidecar,
}

/// Normalized training target for an action, clipped to `[-1, 1]` against
/// round-off at the range ends.
pub fn target_of(a: &policy::Action) -> [f64; N_OUTPUTS] {
    normalize(&a.clamp()).0.map(|v| v.clamp(-1.0, 1.0))
}

/// Appends `(state, target)` rows for every step of `ep`, labelling each state with
/// `labeler` (the recorded controller action when `None`).
pub fn append_rows(
    data: &mut Dataset,
    ep: &Episode,
    labeler: Option<&dyn Policy>,
) -> Result<(), EvalError> {
    for s in &ep.steps {
        let label = match labeler {
            Some(p) => p.predict(&s.state)?,
            None => s.policy_action,
        };
        data.push(s.state.to_array(), target_of(&label));
    }
    Ok(())
}

/// Runs `policy` from every start in parallel and concatenates all steps of the
/// non-diverged episodes into `(state, normalized action)` rows, in start order.
pub fn build_dataset(policy: &dyn Policy, starts: &[Start], env: &Env) -> Result<DatasetBuild, EvalError> {
    if starts.is_empty() {
        return Err(EvalError::Config("at least one start is required".into()));
    }
    env.validate()?;
    let episodes: Vec<Episode> = starts
        .par_iter()
        .map(|s| rollout(policy, None, env, s))
        .collect::<Result<_, _>>()?;
    let mut data = Dataset::with_capacity(episodes.iter().map(Episode::len).sum());
    let mut outcomes = BTreeMap::new();
    for ep in &episodes {
        *outcomes.entry(ep.outcome.as_str().to_string()).or_insert(0) += 1;
        if ep.outcome != Outcome::Diverged {
            append_rows(&mut data, ep, None)?;
        }
    }
    if data.is_empty() {
        return Err(EvalError::Empty("every episode diverged before producing a row".into()));
    }
    data.validate()?;
    let sidecar = DatasetSidecar {
        tool_version: crate::io::TOOL_VERSION.to_string(),
        policy: policy.name().to_string(),
        env_fingerprint: env.fingerprint(),
        dataset_fingerprint: data.fingerprint(),
        h: env.config.h,
        n_episodes: episodes.len(),
        n_rows: data.len(),
        outcomes,
        feature_stats: data.feature_stats(),
    };
    Ok(DatasetBuild {
        data,
        episodes,
        sidecar,
    })
}
