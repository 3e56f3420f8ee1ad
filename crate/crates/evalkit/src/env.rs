//! Simulation settings and starting-point sampling.

use harbor_env::{collision, wrap_angle, HarborGeometry, Pose, RewardParams, Velocity, VesselModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;

use crate::EvalError;

/// When an episode counts as berthed: all tolerances met for `hold_steps` consecutive steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessCriteria {
    /// Distance to the berthing point (m).
    pub pos_tol: f64,
    /// Absolute heading error (rad).
    pub head_tol: f64,
    /// Planar speed `sqrt(u^2 + v^2)` (m/s).
    pub vel_tol: f64,
    pub hold_steps: usize,
}

impl Default for SuccessCriteria {
    fn default() -> Self {
        SuccessCriteria {
            pos_tol: 2.0,
            head_tol: 5f64.to_radians(),
            vel_tol: 0.2,
            hold_steps: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// Integration step (s).
    pub h: f64,
    pub max_steps: usize,
    pub success: SuccessCriteria,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            h: 0.5,
            max_steps: 2500,
            success: SuccessCriteria::default(),
        }
    }
}

/// Harbor, vessel, reward and episode settings: everything a rollout depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Env {
    pub geometry: HarborGeometry,
    pub vessel: VesselModel,
    pub reward: RewardParams,
    pub config: EnvConfig,
}

impl Default for Env {
    fn default() -> Self {
        Env {
            geometry: HarborGeometry::default_harbor(),
            vessel: VesselModel::default_vessel(),
            reward: RewardParams::default(),
            config: EnvConfig::default(),
        }
    }
}

impl Env {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.geometry.validate()?;
        self.vessel.validate()?;
        self.reward.validate()?;
        let c = &self.config;
        if !(c.h > 0.0 && c.h.is_finite()) {
            return Err(EvalError::Config("step size must be positive".into()));
        }
        if c.max_steps == 0 {
            return Err(EvalError::Config("max_steps must be at least 1".into()));
        }
        let s = &c.success;
        if !(s.pos_tol > 0.0 && s.head_tol > 0.0 && s.vel_tol > 0.0) || s.hold_steps == 0 {
            return Err(EvalError::Config("success tolerances must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding; stamped into artifacts.
    pub fn fingerprint(&self) -> String {
        crate::io::fingerprint(self)
    }
}

/// Initial condition of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Start {
    pub pose: Pose,
    pub velocity: Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSampling {
    /// Minimum distance from the start position to every dock boundary (m).
    pub clearance: f64,
    pub max_surge: f64,
    pub max_sway: f64,
    pub max_yaw_rate: f64,
    /// Rejection-sampling budget per requested point.
    pub max_tries_per_point: usize,
}

impl Default for StartSampling {
    fn default() -> Self {
        StartSampling {
            clearance: 50.0,
            max_surge: 0.5,
            max_sway: 0.1,
            max_yaw_rate: 0.002,
            max_tries_per_point: 1000,
        }
    }
}

/// Starting points partitioned into train, validation and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSplits {
    pub seed: u64,
    pub train: Vec<Start>,
    pub val: Vec<Start>,
    pub test: Vec<Start>,
}

/// `n` distinct starts drawn uniformly from the dock area at least `clearance` from
/// its boundary, with uniform headings and small velocities.
pub fn gen_starting_points(
    n: usize,
    seed: u64,
    geom: &HarborGeometry,
    sampling: &StartSampling,
) -> Result<Vec<Start>, EvalError> {
    if n == 0 {
        return Err(EvalError::Config("at least one start is required".into()));
    }
    let verts = geom.dock.vertices();
    if verts.is_empty() {
        return Err(EvalError::Sampling("dock area has no vertices".into()));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &verts {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut seen = HashSet::new();
    let budget = n.saturating_mul(sampling.max_tries_per_point);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > budget {
            return Err(EvalError::Sampling(format!(
                "found {} of {n} starts with {} m clearance after {budget} draws",
                out.len(),
                sampling.clearance
            )));
        }
        let p = [rng.random_range(lo[0]..=hi[0]), rng.random_range(lo[1]..=hi[1])];
        let psi = wrap_angle(rng.random_range(-PI..PI));
        let clear = (0..geom.dock.len()).all(|i| geom.dock.plane_excess(i, p) <= -sampling.clearance);
        let pose = Pose::new(p[0], p[1], psi);
        if !clear || collision(&pose, geom) != 0 {
            continue;
        }
        let velocity = Velocity::new(
            symmetric(&mut rng, sampling.max_surge),
            symmetric(&mut rng, sampling.max_sway),
            symmetric(&mut rng, sampling.max_yaw_rate),
        );
        let key = [pose.x, pose.y, pose.psi].map(f64::to_bits);
        if seen.insert(key) {
            out.push(Start { pose, velocity });
        }
    }
    Ok(out)
}

fn symmetric(rng: &mut ChaCha8Rng, limit: f64) -> f64 {
    if limit > 0.0 {
        rng.random_range(-limit..=limit)
    } else {
        0.0
    }
}

/// Splits starts 80/5/15 into train/validation/test, in sampling order.
pub fn split_starts(starts: Vec<Start>, seed: u64) -> StartSplits {
    let n = starts.len();
    let n_train = n * 80 / 100;
    let n_val = n * 5 / 100;
    let mut it = starts.into_iter();
    let train = it.by_ref().take(n_train).collect();
    let val = it.by_ref().take(n_val).collect();
    StartSplits {
        seed,
        train,
        val,
        test: it.collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousand_starts_split_800_50_150() {
        let geom = HarborGeometry::default_harbor();
        let s = gen_starting_points(1000, 3, &geom, &StartSampling::default()).unwrap();
        let sp = split_starts(s, 3);
        assert_eq!((sp.train.len(), sp.val.len(), sp.test.len()), (800, 50, 150));
    }

    #[test]
    fn infeasible_clearance_is_reported() {
        let geom = HarborGeometry::default_harbor();
        let sampling = StartSampling {
            clearance: 5000.0,
            max_tries_per_point: 10,
            ..Default::default()
        };
        assert!(matches!(
            gen_starting_points(3, 0, &geom, &sampling),
            Err(EvalError::Sampling(_))
        ));
    }

    #[test]
    fn default_env_is_valid() {
        Env::default().validate().unwrap();
        assert_eq!(Env::default().fingerprint(), Env::default().fingerprint());
    }
}
