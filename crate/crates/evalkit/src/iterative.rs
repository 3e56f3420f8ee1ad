//! Iterative data sampling: grow a tree, let it drive, label the states it visits
//! with the black box, append, rebuild.

use lmt_core::{grow, training_loss, BuildConfig, Dataset, LmTree};
use policy::Policy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::append_rows;
use crate::{build_dataset, rollout, Env, Episode, EvalError, Outcome, Start, TreePolicy};

/// One round of the sampling loop.
#[derive(Debug, Clone)]
pub struct Iteration {
    /// 1-based iteration index.
    pub index: usize,
    /// Rows available to this iteration's build.
    pub n_rows: usize,
    pub tree: LmTree,
}

/// Per-iteration summary stored in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub index: usize,
    pub n_rows: usize,
    pub n_leaves: usize,
    pub training_mse: f64,
    pub validation_mse: f64,
}

/// Result of an iterative build with the selected tree.
#[derive(Debug, Clone)]
pub struct IterativeBuild {
    pub iterations: Vec<Iteration>,
    pub summaries: Vec<IterationSummary>,
    /// Index into `iterations` of the tree with the lowest validation error.
    pub best: usize,
}

/// Mean squared error over all rows and outputs, in normalized units.
pub fn mse(tree: &LmTree, data: &Dataset) -> f64 {
    training_loss(tree, data)
}

/// The first iteration trains on `policy`'s own runs from `starts`; each later one
/// lets the previous tree drive from the same starts, labels every visited state
/// with `policy` and rebuilds on the grown dataset. All trees are returned.
pub fn iterative_sampling_build(
    policy: &dyn Policy,
    env: &Env,
    starts: &[Start],
    cfg: &BuildConfig,
    max_it: usize,
) -> Result<Vec<Iteration>, EvalError> {
    if max_it == 0 {
        return Err(EvalError::Config("at least one iteration is required".into()));
    }
    cfg.validate()?;
    let mut data = build_dataset(policy, starts, env)?.data;
    let mut out: Vec<Iteration> = Vec::with_capacity(max_it);
    for index in 1..=max_it {
        if let Some(prev) = out.last() {
            let driver = TreePolicy::new(prev.tree.clone());
            let episodes: Vec<Episode> = starts
                .par_iter()
                .map(|s| rollout(&driver, None, env, s))
                .collect::<Result<_, _>>()?;
            for ep in episodes.iter().filter(|e| e.outcome != Outcome::Diverged) {
                append_rows(&mut data, ep, Some(policy))?;
            }
        }
        let tree = grow(&data, cfg)?;
        out.push(Iteration {
            index,
            n_rows: data.len(),
            tree,
        });
    }
    Ok(out)
}

/// Scores every iteration on `validation` and picks the lowest error (earliest on ties).
pub fn select_best(
    iterations: Vec<Iteration>,
    validation: &Dataset,
) -> Result<IterativeBuild, EvalError> {
    if iterations.is_empty() {
        return Err(EvalError::Empty("no iterations to choose from".into()));
    }
    if validation.is_empty() {
        return Err(EvalError::Empty("validation set has no rows".into()));
    }
    let summaries: Vec<IterationSummary> = iterations
        .iter()
        .map(|it| IterationSummary {
            index: it.index,
            n_rows: it.n_rows,
            n_leaves: it.tree.n_leaves(),
            training_mse: it
                .tree
                .metadata
                .history
                .last()
                .map_or(f64::NAN, |h| h.training_loss),
            validation_mse: mse(&it.tree, validation),
        })
        .collect();
    let best = summaries
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| {
            if s.validation_mse < summaries[best].validation_mse {
                i
            } else {
                best
            }
        });
    Ok(IterativeBuild {
        iterations,
        summaries,
        best,
    })
}
