//! Closed-loop episodes.

use harbor_env::{
    featurize, reward, step, thrust_allocation, Action, Forces, Pose, RewardComponents,
    StateVector, Velocity,
};
use lmt_core::LmTree;
use policy::{Policy, PolicyError};
use serde::{Deserialize, Serialize};

use crate::{Env, EvalError, Start};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReachedBerth,
    Collided,
    Timeout,
    /// The dynamics produced a non-finite state.
    Diverged,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::ReachedBerth => "reached_berth",
            Outcome::Collided => "collided",
            Outcome::Timeout => "timeout",
            Outcome::Diverged => "diverged",
        }
    }
}

/// One decision: the observed state, what each controller asked for, what was
/// applied, and the reward of the observed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub pose: Pose,
    pub velocity: Velocity,
    pub state: StateVector,
    pub policy_action: Action,
    pub surrogate_action: Option<Action>,
    pub active_action: Action,
    pub forces: Forces,
    pub reward: RewardComponents,
    pub reward_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub controller: String,
    pub start: Start,
    pub h: f64,
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
    pub cumulative_reward: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Result of feeding one action to an [`EpisodeRunner`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub record: StepRecord,
    /// Set when this step ended the episode.
    pub outcome: Option<Outcome>,
}

/// Step-by-step episode engine shared by batch rollouts and live sessions.
///
/// Each step observes the current state, scores it (the rate of change of the
/// berth distance comes from the previous observation; zero on the first step),
/// checks termination on that state, and, if the episode continues, integrates the
/// active action over one step.
#[derive(Debug, Clone)]
pub struct EpisodeRunner<'a> {
    env: &'a Env,
    pose: Pose,
    velocity: Velocity,
    step: usize,
    prev_distance: Option<f64>,
    hold: usize,
    outcome: Option<Outcome>,
}

impl<'a> EpisodeRunner<'a> {
    pub fn new(env: &'a Env, start: &Start) -> Self {
        EpisodeRunner {
            env,
            pose: start.pose,
            velocity: start.velocity,
            step: 0,
            prev_distance: None,
            hold: 0,
            outcome: None,
        }
    }

    pub fn env(&self) -> &Env {
        self.env
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn velocity(&self) -> Velocity {
        self.velocity
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    /// The state the controllers see at the current step.
    pub fn observe(&self) -> StateVector {
        featurize(&self.pose, &self.velocity, &self.env.geometry)
    }

    /// Records the current step with the given actions and advances the vessel with
    /// `active` (clamped to the physical ranges) unless the episode ends here.
    pub fn advance(
        &mut self,
        state: &StateVector,
        policy_action: Action,
        surrogate_action: Option<Action>,
        active: Action,
    ) -> Result<Advance, EvalError> {
        if self.outcome.is_some() {
            return Err(EvalError::Usage("episode has already terminated".into()));
        }
        let cfg = &self.env.config;
        let active = active.clamp();
        let forces = thrust_allocation(&active, &self.env.vessel.thrusters)?;
        let distance = state.berth_distance();
        let d_dot = self.prev_distance.map_or(0.0, |p| (distance - p) / cfg.h);
        let (reward_total, components) = reward(
            state.x_tilde,
            state.y_tilde,
            state.psi_tilde,
            state.l,
            state.d_obs,
            d_dot,
            &self.env.reward,
        );
        let record = StepRecord {
            step: self.step,
            t: self.step as f64 * cfg.h,
            pose: self.pose,
            velocity: self.velocity,
            state: *state,
            policy_action,
            surrogate_action,
            active_action: active,
            forces,
            reward: components,
            reward_total,
        };

        let s = &cfg.success;
        let settled = distance < s.pos_tol
            && state.psi_tilde.abs() < s.head_tol
            && state.u.hypot(state.v) < s.vel_tol;
        self.hold = if settled { self.hold + 1 } else { 0 };

        let mut outcome = if state.in_contact() {
            Some(Outcome::Collided)
        } else if self.hold >= s.hold_steps {
            Some(Outcome::ReachedBerth)
        } else if self.step + 1 >= cfg.max_steps {
            Some(Outcome::Timeout)
        } else {
            None
        };
        if outcome.is_none() {
            let (pose, velocity) = step(&self.pose, &self.velocity, &active, cfg.h, &self.env.vessel)?;
            let next_ok = pose.x.is_finite() && pose.y.is_finite() && pose.psi.is_finite() && velocity.is_finite();
            if next_ok {
                self.pose = pose;
                self.velocity = velocity;
            } else {
                outcome = Some(Outcome::Diverged);
            }
        }
        self.prev_distance = Some(distance);
        self.step += 1;
        self.outcome = outcome;
        Ok(Advance { record, outcome })
    }
}

/// Runs `controller` from `start` until termination. A `shadow` controller is
/// evaluated on every state and recorded without influencing the vessel.
pub fn rollout(
    controller: &dyn Policy,
    shadow: Option<&dyn Policy>,
    env: &Env,
    start: &Start,
) -> Result<Episode, EvalError> {
    let mut runner = EpisodeRunner::new(env, start);
    let mut steps = Vec::new();
    let mut outcome = Outcome::Timeout;
    while !runner.is_done() {
        let state = runner.observe();
        if !state.is_finite() {
            outcome = Outcome::Diverged;
            break;
        }
        let action = controller.predict(&state)?.clamp();
        let shadowed = shadow.map(|s| s.predict(&state)).transpose()?.map(Action::clamp);
        let adv = runner.advance(&state, action, shadowed, action)?;
        steps.push(adv.record);
        if let Some(o) = adv.outcome {
            outcome = o;
        }
    }
    let cumulative_reward = steps.iter().map(|s| s.reward_total).sum();
    Ok(Episode {
        controller: controller.name().to_string(),
        start: *start,
        h: env.config.h,
        steps,
        outcome,
        cumulative_reward,
    })
}

/// A linear model tree used as a controller: prediction mapped back to physical
/// units and clipped to the action ranges.
#[derive(Debug, Clone)]
pub struct TreePolicy {
    tree: LmTree,
    name: String,
}

impl TreePolicy {
    pub fn new(tree: LmTree) -> Self {
        let name = format!("lmt-{}", tree.n_leaves());
        TreePolicy { tree, name }
    }

    pub fn with_name(tree: LmTree, name: impl Into<String>) -> Self {
        TreePolicy {
            tree,
            name: name.into(),
        }
    }

    pub fn tree(&self) -> &LmTree {
        &self.tree
    }
}

impl Policy for TreePolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, x: &StateVector) -> Result<Action, PolicyError> {
        if !x.is_finite() {
            return Err(PolicyError::NonFiniteInput);
        }
        let y = self.tree.predict(&x.to_array());
        Ok(Action::from_array(self.tree.denormalize(&y)).clamp())
    }
}
