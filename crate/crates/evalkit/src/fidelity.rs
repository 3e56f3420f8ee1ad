//! How closely a surrogate reproduces the black box: per-action error, force-space
//! error, closed-loop outcomes and rewards.

use harbor_env::{thrust_allocation, Action, Forces, StateVector, ThrusterSpec, ACTION_BOUNDS, ACTION_NAMES, N_ACTIONS};
use lmt_core::Features;
use policy::Policy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{rollout, Env, Episode, EvalError, Outcome, Start};

/// Error statistics of one action output. Angles are reported in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionError {
    pub action: String,
    pub unit: String,
    /// Width of the physical range in `unit`.
    pub range: f64,
    pub mae: f64,
    pub mae_pct: f64,
    /// Standard deviation of the absolute error.
    pub std: f64,
    pub std_pct: f64,
    pub max_abs: f64,
}

/// Open-loop action error over a set of states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputError {
    pub n_samples: usize,
    pub actions: Vec<ActionError>,
}

impl OutputError {
    pub fn worst_mae_pct(&self) -> f64 {
        self.actions.iter().map(|a| a.mae_pct).fold(0.0, f64::max)
    }
}

fn unit_scale(a: usize) -> (&'static str, f64) {
    if a < 3 {
        ("kN", 1.0)
    } else {
        ("deg", 180.0 / std::f64::consts::PI)
    }
}

/// Summary of per-sample absolute differences.
fn abs_stats(abs: &[f64]) -> (f64, f64, f64) {
    let n = abs.len() as f64;
    let mean = abs.iter().sum::<f64>() / n;
    let var = abs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let max = abs.iter().copied().fold(0.0, f64::max);
    (mean, var.sqrt(), max)
}

/// Per-action absolute error statistics between paired action sequences.
pub fn action_error(reference: &[Action], candidate: &[Action]) -> Result<OutputError, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::Empty("no samples to compare".into()));
    }
    if reference.len() != candidate.len() {
        return Err(EvalError::Usage(format!(
            "{} reference actions but {} candidate actions",
            reference.len(),
            candidate.len()
        )));
    }
    let actions = (0..N_ACTIONS)
        .map(|a| {
            let (unit, k) = unit_scale(a);
            let abs: Vec<f64> = reference
                .iter()
                .zip(candidate)
                .map(|(r, c)| k * (r.to_array()[a] - c.to_array()[a]).abs())
                .collect();
            let (mae, std, max_abs) = abs_stats(&abs);
            let range = k * ACTION_BOUNDS[a].width();
            ActionError {
                action: ACTION_NAMES[a].to_string(),
                unit: unit.to_string(),
                range,
                mae,
                mae_pct: 100.0 * mae / range,
                std,
                std_pct: 100.0 * std / range,
                max_abs,
            }
        })
        .collect();
    Ok(OutputError {
        n_samples: reference.len(),
        actions,
    })
}

/// Actions of `policy` and `surrogate` on every state.
pub fn paired_actions(
    surrogate: &dyn Policy,
    policy: &dyn Policy,
    states: &[Features],
) -> Result<(Vec<Action>, Vec<Action>), EvalError> {
    let pairs: Vec<(Action, Action)> = states
        .par_iter()
        .map(|x| {
            let s = StateVector::from_array(*x);
            Ok((policy.predict(&s)?.clamp(), surrogate.predict(&s)?.clamp()))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Evaluates both controllers on every state and compares their actions.
pub fn output_error(
    surrogate: &dyn Policy,
    policy: &dyn Policy,
    states: &[Features],
) -> Result<OutputError, EvalError> {
    let (reference, candidate) = paired_actions(surrogate, policy, states)?;
    action_error(&reference, &candidate)
}

/// Summary of force-space differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceErrorSummary {
    pub n_samples: usize,
    /// Mean absolute difference of (Fx kN, Fy kN, T kN m).
    pub mae: [f64; 3],
    pub std: [f64; 3],
    pub max_abs: [f64; 3],
}

/// Per-step total-force differences between two action sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceComparison {
    pub differences: Vec<Forces>,
    pub summary: ForceErrorSummary,
}

/// Maps both actions of every pair through the thrust allocation and differences
/// the resulting totals (`reference - candidate`).
pub fn force_differences(
    reference: &[Action],
    candidate: &[Action],
    thrusters: &[ThrusterSpec],
) -> Result<ForceComparison, EvalError> {
    if reference.len() != candidate.len() {
        return Err(EvalError::Usage("action sequences differ in length".into()));
    }
    let differences = reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| Ok(thrust_allocation(r, thrusters)?.sub(thrust_allocation(c, thrusters)?)))
        .collect::<Result<Vec<Forces>, EvalError>>()?;
    let mut summary = ForceErrorSummary {
        n_samples: differences.len(),
        mae: [0.0; 3],
        std: [0.0; 3],
        max_abs: [0.0; 3],
    };
    if !differences.is_empty() {
        for k in 0..3 {
            let abs: Vec<f64> = differences
                .iter()
                .map(|d| [d.fx, d.fy, d.torque][k].abs())
                .collect();
            (summary.mae[k], summary.std[k], summary.max_abs[k]) = abs_stats(&abs);
        }
    }
    Ok(ForceComparison {
        differences,
        summary,
    })
}

/// Force differences between the actions recorded in `episode` and what
/// `surrogate` does in the same states.
pub fn force_comparison(
    surrogate: &dyn Policy,
    episode: &Episode,
    thrusters: &[ThrusterSpec],
) -> Result<ForceComparison, EvalError> {
    let reference: Vec<Action> = episode.steps.iter().map(|s| s.policy_action).collect();
    let candidate = episode
        .steps
        .iter()
        .map(|s| Ok(surrogate.predict(&s.state)?.clamp()))
        .collect::<Result<Vec<Action>, EvalError>>()?;
    force_differences(&reference, &candidate, thrusters)
}

/// Outcome of each controller from each start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTable {
    pub controllers: Vec<String>,
    pub starts: Vec<Start>,
    /// `outcomes[c][s]` for controller `c` from start `s`.
    pub outcomes: Vec<Vec<Outcome>>,
    pub cumulative_rewards: Vec<Vec<f64>>,
    pub n_steps: Vec<Vec<usize>>,
}

impl PathTable {
    /// Fraction of starts on which controllers `a` and `b` ended the same way.
    pub fn agreement(&self, a: usize, b: usize) -> f64 {
        let n = self.starts.len();
        if n == 0 {
            return 0.0;
        }
        let same = (0..n)
            .filter(|&s| self.outcomes[a][s] == self.outcomes[b][s])
            .count();
        same as f64 / n as f64
    }
}

/// The table plus every episode, `episodes[c][s]`.
#[derive(Debug, Clone)]
pub struct PathComparison {
    pub table: PathTable,
    pub episodes: Vec<Vec<Episode>>,
}

/// Runs every controller closed-loop from the same starts.
pub fn path_comparison(
    controllers: &[&dyn Policy],
    env: &Env,
    starts: &[Start],
) -> Result<PathComparison, EvalError> {
    if starts.is_empty() {
        return Err(EvalError::Config("at least one start is required".into()));
    }
    let episodes: Vec<Vec<Episode>> = controllers
        .iter()
        .map(|c| {
            starts
                .par_iter()
                .map(|s| rollout(*c, None, env, s))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let per = |f: &dyn Fn(&Episode) -> f64| -> Vec<Vec<f64>> {
        episodes.iter().map(|row| row.iter().map(f).collect()).collect()
    };
    let table = PathTable {
        controllers: controllers.iter().map(|c| c.name().to_string()).collect(),
        starts: starts.to_vec(),
        outcomes: episodes
            .iter()
            .map(|row| row.iter().map(|e| e.outcome).collect())
            .collect(),
        cumulative_rewards: per(&|e| e.cumulative_reward),
        n_steps: episodes
            .iter()
            .map(|row| row.iter().map(Episode::len).collect())
            .collect(),
    };
    Ok(PathComparison { table, episodes })
}

/// Aligned per-step rewards of two runs from the same start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardComparison {
    pub controller_a: String,
    pub controller_b: String,
    /// Per-step totals, truncated to the shorter episode.
    pub rewards_a: Vec<f64>,
    pub rewards_b: Vec<f64>,
    /// Totals over the full episodes.
    pub cumulative_a: f64,
    pub cumulative_b: f64,
    /// `cumulative_a - cumulative_b`.
    pub gap: f64,
}

impl RewardComparison {
    /// `|gap| / |cumulative_a|`; zero when both totals are zero.
    pub fn relative_gap(&self) -> f64 {
        if self.gap == 0.0 {
            0.0
        } else {
            self.gap.abs() / self.cumulative_a.abs()
        }
    }
}

pub fn reward_comparison(a: &Episode, b: &Episode) -> Result<RewardComparison, EvalError> {
    if a.start != b.start {
        return Err(EvalError::Usage("episodes start from different states".into()));
    }
    let n = a.len().min(b.len());
    let cumulative = |e: &Episode| e.steps.iter().map(|s| s.reward_total).sum::<f64>();
    let (cumulative_a, cumulative_b) = (cumulative(a), cumulative(b));
    Ok(RewardComparison {
        controller_a: a.controller.clone(),
        controller_b: b.controller.clone(),
        rewards_a: a.steps[..n].iter().map(|s| s.reward_total).collect(),
        rewards_b: b.steps[..n].iter().map(|s| s.reward_total).collect(),
        cumulative_a,
        cumulative_b,
        gap: cumulative_a - cumulative_b,
    })
}

/// Closed-loop agreement between a reference controller and a surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopSummary {
    pub n_starts: usize,
    pub reference: String,
    pub surrogate: String,
    pub outcome_agreement: f64,
    /// `[reached, collided, timeout, diverged]` counts per controller.
    pub reference_outcomes: [usize; 4],
    pub surrogate_outcomes: [usize; 4],
    /// Median relative cumulative-reward gap over starts with matching outcomes.
    pub median_relative_reward_gap: Option<f64>,
}

fn outcome_counts(row: &[Outcome]) -> [usize; 4] {
    let mut c = [0; 4];
    for o in row {
        c[match o {
            Outcome::ReachedBerth => 0,
            Outcome::Collided => 1,
            Outcome::Timeout => 2,
            Outcome::Diverged => 3,
        }] += 1;
    }
    c
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Compares rows `reference` and `surrogate` of a path comparison.
pub fn closed_loop_summary(
    cmp: &PathComparison,
    reference: usize,
    surrogate: usize,
) -> Result<ClosedLoopSummary, EvalError> {
    let t = &cmp.table;
    let mut gaps = Vec::new();
    for s in 0..t.starts.len() {
        if t.outcomes[reference][s] == t.outcomes[surrogate][s] {
            let r = reward_comparison(&cmp.episodes[reference][s], &cmp.episodes[surrogate][s])?;
            gaps.push(r.relative_gap());
        }
    }
    Ok(ClosedLoopSummary {
        n_starts: t.starts.len(),
        reference: t.controllers[reference].clone(),
        surrogate: t.controllers[surrogate].clone(),
        outcome_agreement: t.agreement(reference, surrogate),
        reference_outcomes: outcome_counts(&t.outcomes[reference]),
        surrogate_outcomes: outcome_counts(&t.outcomes[surrogate]),
        median_relative_reward_gap: median(&mut gaps),
    })
}

/// Everything `eval` reports about one surrogate. Contains no timings, so equal
/// inputs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub tool_version: String,
    pub policy: String,
    pub surrogate: String,
    pub tree_fingerprint: String,
    pub env_fingerprint: String,
    pub seed: u64,
    pub h: f64,
    pub success: crate::SuccessCriteria,
    pub output_error: OutputError,
    pub force_error: ForceErrorSummary,
    pub closed_loop: Option<ClosedLoopSummary>,
}

/// Inputs of a fidelity evaluation besides the two controllers.
#[derive(Debug, Clone, Copy)]
pub struct FidelityInputs<'a> {
    pub env: &'a Env,
    /// States for the open-loop and force-space comparison.
    pub states: &'a [Features],
    /// Starts for the closed-loop comparison; skipped when empty.
    pub starts: &'a [Start],
    pub seed: u64,
}

/// Open-loop, force-space and (optionally) closed-loop comparison of a tree
/// surrogate against the black box.
pub fn fidelity_report(
    surrogate: &crate::TreePolicy,
    policy: &dyn Policy,
    inputs: FidelityInputs<'_>,
) -> Result<FidelityReport, EvalError> {
    let FidelityInputs { env, states, starts, seed } = inputs;
    let (reference, candidate) = paired_actions(surrogate, policy, states)?;
    let output_error = action_error(&reference, &candidate)?;
    let force_error = force_differences(&reference, &candidate, &env.vessel.thrusters)?.summary;
    let closed_loop = if starts.is_empty() {
        None
    } else {
        let cmp = path_comparison(&[policy, surrogate], env, starts)?;
        Some(closed_loop_summary(&cmp, 0, 1)?)
    };
    Ok(FidelityReport {
        tool_version: crate::io::TOOL_VERSION.to_string(),
        policy: policy.name().to_string(),
        surrogate: surrogate.name().to_string(),
        tree_fingerprint: crate::io::fingerprint(surrogate.tree()),
        env_fingerprint: env.fingerprint(),
        seed,
        h: env.config.h,
        success: env.config.success,
        output_error,
        force_error,
        closed_loop,
    })
}
