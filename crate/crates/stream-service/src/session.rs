//! The live episode: one owner of all simulation state, advanced one step at a time.

use evalkit::{Env, EpisodeRunner, Start, TreePolicy};
use explain::explain;
use harbor_env::Action;
use policy::Policy;
use std::time::Duration;

use crate::protocol::{Command, ErrorCode, Frame, Mode, Reply, RewardBlock, PROTOCOL_VERSION};
use crate::ServiceError;

/// Largest accepted real-time factor.
pub const MAX_SPEED: f64 = 1e6;

/// A docking episode shadowed by a surrogate tree and open to operator takeover.
///
/// Every step both controllers see the same state; attributions always come from
/// the surrogate, also while the operator drives. In takeover mode the most recent
/// operator action is held until replaced; on takeover it starts as the action
/// applied last, so control changes hands without a jump.
pub struct Session<'a> {
    runner: EpisodeRunner<'a>,
    controller: &'a dyn Policy,
    surrogate: &'a TreePolicy,
    mode: Mode,
    held: Action,
    last_active: Action,
    paused: bool,
    speed: f64,
    cumulative: f64,
}

fn valid_speed(f: f64) -> bool {
    f > 0.0 && f <= MAX_SPEED
}

impl<'a> Session<'a> {
    pub fn new(
        env: &'a Env,
        start: &Start,
        controller: &'a dyn Policy,
        surrogate: &'a TreePolicy,
        speed: f64,
    ) -> Result<Self, ServiceError> {
        env.validate()?;
        if !valid_speed(speed) {
            return Err(ServiceError::Config(format!("real-time factor must lie in (0, {MAX_SPEED}]")));
        }
        let finite = [start.pose.x, start.pose.y, start.pose.psi].iter().all(|v| v.is_finite())
            && start.velocity.is_finite();
        if !finite {
            return Err(ServiceError::Config("start state must be finite".into()));
        }
        Ok(Session {
            runner: EpisodeRunner::new(env, start),
            controller,
            surrogate,
            mode: Mode::Auto,
            held: Action::ZERO,
            last_active: Action::ZERO,
            paused: false,
            speed,
            cumulative: 0.0,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn is_done(&self) -> bool {
        self.runner.is_done()
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Wall-clock time between steps at the current real-time factor.
    pub fn step_interval(&self) -> Duration {
        Duration::from_secs_f64(self.runner.env().config.h / self.speed)
    }

    pub fn set_paused(&mut self, paused: bool) {
        self.paused = paused;
    }

    fn ack(&self, name: &str) -> Reply {
        Reply::Ack {
            ack: name.to_string(),
            mode: self.mode,
            paused: self.paused,
            speed: self.speed,
        }
    }

    /// Applies one command. Operator actions are clipped to the physical ranges.
    pub fn apply(&mut self, cmd: Command) -> Reply {
        match cmd {
            Command::Pause => {
                self.paused = true;
                self.ack("pause")
            }
            Command::Resume => {
                self.paused = false;
                self.ack("resume")
            }
            Command::Takeover => {
                if self.mode == Mode::Auto {
                    self.held = self.last_active;
                }
                self.mode = Mode::Human;
                self.ack("takeover")
            }
            Command::Release => {
                self.mode = Mode::Auto;
                self.ack("release")
            }
            Command::SetAction { action } => {
                if self.mode != Mode::Human {
                    return Reply::error(ErrorCode::NotInTakeover, None);
                }
                let finite = action.to_array().iter().all(|v| v.is_finite());
                if !finite {
                    return Reply::error(ErrorCode::InvalidArguments, "action must be finite".to_string());
                }
                self.held = action.clamp();
                self.ack("set_action")
            }
            Command::SetSpeed { factor } => {
                if !valid_speed(factor) {
                    return Reply::error(
                        ErrorCode::InvalidArguments,
                        format!("factor must lie in (0, {MAX_SPEED}]"),
                    );
                }
                self.speed = factor;
                self.ack("set_speed")
            }
        }
    }

    /// Advances one step and returns its frame; `None` once the episode is over.
    /// Pausing is the caller's business: `step` always advances.
    pub fn step(&mut self) -> Result<Option<Frame>, ServiceError> {
        if self.runner.is_done() {
            return Ok(None);
        }
        let state = self.runner.observe();
        let x = state.to_array();
        let action = self.controller.predict(&state)?.clamp();
        let surrogate_action = self.surrogate.predict(&state)?.clamp();
        let step = self.runner.step_index() as u64;
        let attr = explain(self.surrogate.tree(), &x, step);
        let active = match self.mode {
            Mode::Auto => action,
            Mode::Human => self.held,
        };
        let adv = self.runner.advance(&state, action, Some(surrogate_action), active)?;
        let rec = adv.record;
        self.last_active = rec.active_action;
        self.cumulative += rec.reward_total;
        Ok(Some(Frame {
            v: PROTOCOL_VERSION,
            t: rec.t,
            step,
            pose: rec.pose,
            state: x,
            action,
            surrogate_action,
            active_action: rec.active_action,
            attr,
            forces: rec.forces,
            reward: RewardBlock {
                components: rec.reward,
                total: rec.reward_total,
                cumulative: self.cumulative,
            },
            mode: self.mode,
            outcome: adv.outcome,
        }))
    }
}
