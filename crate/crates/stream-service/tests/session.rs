mod common;

use common::{fixed_tree, moving_start, short_env};
use evalkit::{rollout, Outcome, TreePolicy};
use harbor_env::{Action, ACTION_BOUNDS};
use policy::BaselineController;
use stream_service::{Command, ErrorCode, Frame, Mode, Reply, ServiceError, Session};

fn run_all(session: &mut Session) -> Vec<Frame> {
    let mut frames = Vec::new();
    while let Some(f) = session.step().unwrap() {
        frames.push(f);
    }
    frames
}

#[test]
fn untouched_session_matches_batch_rollout() {
    let env = short_env(400);
    let controller = BaselineController::default();
    let surrogate = TreePolicy::new(fixed_tree());
    let start = moving_start();
    let ep = rollout(&controller, Some(&surrogate), &env, &start).unwrap();

    let mut session = Session::new(&env, &start, &controller, &surrogate, 1.0).unwrap();
    let frames = run_all(&mut session);
    assert!(session.is_done());
    assert_eq!(frames.len(), ep.len());
    let mut cumulative = 0.0;
    for (f, s) in frames.iter().zip(&ep.steps) {
        assert_eq!(f.step, s.step as u64);
        assert_eq!(f.t, s.t);
        assert_eq!(f.pose, s.pose);
        assert_eq!(f.state, s.state.to_array());
        assert_eq!(f.action, s.policy_action);
        assert_eq!(Some(f.surrogate_action), s.surrogate_action);
        assert_eq!(f.active_action, s.active_action);
        assert_eq!(f.forces, s.forces);
        assert_eq!(f.reward.components, s.reward);
        assert_eq!(f.reward.total, s.reward_total);
        cumulative += s.reward_total;
        assert_eq!(f.reward.cumulative, cumulative);
        assert_eq!(f.mode, Mode::Auto);
        assert_eq!(f.attr.step, f.step);
    }
    let last = frames.last().unwrap();
    assert_eq!(last.outcome, Some(ep.outcome));
    assert!(frames[..frames.len() - 1].iter().all(|f| f.outcome.is_none()));
    assert!(session.step().unwrap().is_none());
}

#[test]
fn zero_thrust_takeover_decays_by_damping_alone() {
    let env = short_env(400);
    let controller = BaselineController::default();
    let surrogate = TreePolicy::new(fixed_tree());
    let mut session = Session::new(&env, &moving_start(), &controller, &surrogate, 1.0).unwrap();
    for _ in 0..5 {
        session.step().unwrap().unwrap();
    }
    let reply = session.apply(Command::Takeover);
    assert!(matches!(reply, Reply::Ack { mode: Mode::Human, .. }));
    assert!(!session.apply(Command::SetAction { action: Action::ZERO }).is_error());

    let h = env.config.h;
    let m = env.vessel.mass;
    let d = env.vessel.damping;
    let mut prev: Option<Frame> = None;
    for _ in 0..30 {
        let f = session.step().unwrap().unwrap();
        assert_eq!(f.mode, Mode::Human);
        assert_eq!(f.active_action, Action::ZERO);
        assert_eq!((f.forces.fx, f.forces.fy, f.forces.torque), (0.0, 0.0, 0.0));
        // the controller keeps computing while the operator drives
        assert_ne!(f.action, Action::ZERO);
        if let Some(p) = &prev {
            for i in 0..3 {
                let vk = p.state[3 + i];
                let expected = vk - h * d[i][i] / m[i][i] * vk;
                let got = f.state[3 + i];
                assert!((got - expected).abs() <= 1e-12 * vk.abs().max(1e-12), "dof {i}: {got} vs {expected}");
            }
        }
        prev = Some(f);
    }
}

#[test]
fn takeover_holds_the_last_applied_action_until_replaced() {
    let env = short_env(400);
    let controller = BaselineController::default();
    let surrogate = TreePolicy::new(fixed_tree());
    let mut session = Session::new(&env, &moving_start(), &controller, &surrogate, 1.0).unwrap();
    let before = session.step().unwrap().unwrap();
    session.apply(Command::Takeover);
    let held = session.step().unwrap().unwrap();
    assert_eq!(held.active_action, before.active_action);
    let again = session.step().unwrap().unwrap();
    assert_eq!(again.active_action, before.active_action);

    let reply = session.apply(Command::Release);
    assert!(matches!(reply, Reply::Ack { mode: Mode::Auto, .. }));
    let auto = session.step().unwrap().unwrap();
    assert_eq!(auto.mode, Mode::Auto);
    assert_eq!(auto.active_action, auto.action);
}

#[test]
fn set_action_requires_takeover() {
    let env = short_env(50);
    let controller = BaselineController::default();
    let surrogate = TreePolicy::new(fixed_tree());
    let mut session = Session::new(&env, &moving_start(), &controller, &surrogate, 1.0).unwrap();
    let reply = session.apply(Command::SetAction { action: Action::ZERO });
    assert_eq!(reply, Reply::error(ErrorCode::NotInTakeover, None));
    assert_eq!(
        serde_json::to_string(&reply).unwrap(),
        r#"{"err":"not_in_takeover"}"#
    );
    assert_eq!(session.mode(), Mode::Auto);
}

#[test]
fn operator_actions_are_clipped_and_must_be_finite() {
    let env = short_env(50);
    let controller = BaselineController::default();
    let surrogate = TreePolicy::new(fixed_tree());
    let mut session = Session::new(&env, &moving_start(), &controller, &surrogate, 1.0).unwrap();
    session.apply(Command::Takeover);
    let wild = Action {
        f1: 1e6,
        f2: -1e6,
        f3: 500.0,
        alpha1: 10.0,
        alpha2: -10.0,
    };
    assert!(!session.apply(Command::SetAction { action: wild }).is_error());
    let f = session.step().unwrap().unwrap();
    let a = f.active_action.to_array();
    let expected = [
        ACTION_BOUNDS[0].max,
        ACTION_BOUNDS[1].min,
        ACTION_BOUNDS[2].max,
        ACTION_BOUNDS[3].max,
        ACTION_BOUNDS[4].min,
    ];
    assert_eq!(a, expected);

    let nan = Action { f1: f64::NAN, ..Action::ZERO };
    let reply = session.apply(Command::SetAction { action: nan });
    assert!(matches!(reply, Reply::Error { err: ErrorCode::InvalidArguments, .. }));
    assert_eq!(session.step().unwrap().unwrap().active_action.to_array(), expected);
}

#[test]
fn speed_and_pause_commands() {
    let env = short_env(50);
    let controller = BaselineController::default();
    let surrogate = TreePolicy::new(fixed_tree());
    let mut session = Session::new(&env, &moving_start(), &controller, &surrogate, 2.0).unwrap();
    assert_eq!(session.step_interval().as_secs_f64(), env.config.h / 2.0);
    for bad in [0.0, -1.0, f64::NAN, f64::INFINITY, 1e7] {
        let r = session.apply(Command::SetSpeed { factor: bad });
        assert!(matches!(r, Reply::Error { err: ErrorCode::InvalidArguments, .. }), "{bad}");
    }
    assert_eq!(session.speed(), 2.0);
    assert!(matches!(session.apply(Command::SetSpeed { factor: 10.0 }), Reply::Ack { speed, .. } if speed == 10.0));
    assert!(matches!(session.apply(Command::Pause), Reply::Ack { paused: true, .. }));
    assert!(session.is_paused());
    assert!(matches!(session.apply(Command::Resume), Reply::Ack { paused: false, .. }));

    assert!(matches!(
        Session::new(&env, &moving_start(), &controller, &surrogate, 0.0),
        Err(ServiceError::Config(_))
    ));
    let mut bad_start = moving_start();
    bad_start.pose.x = f64::NAN;
    assert!(Session::new(&env, &bad_start, &controller, &surrogate, 1.0).is_err());
}

#[test]
fn frames_round_trip_through_json() {
    let env = short_env(60);
    let controller = BaselineController::default();
    let surrogate = TreePolicy::new(fixed_tree());
    let mut session = Session::new(&env, &moving_start(), &controller, &surrogate, 1.0).unwrap();
    let frames = run_all(&mut session);
    assert_eq!(frames.last().unwrap().outcome, Some(Outcome::Timeout));
    for f in &frames {
        let text = serde_json::to_string(f).unwrap();
        let back: Frame = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, f);
    }

    let value = serde_json::to_value(&frames[0]).unwrap();
    let mut keys: Vec<_> = value["attr"]["compressed"].as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["distance", "heading", "obstacle", "velocity"]);
    let mut reward_keys: Vec<_> = value["reward"].as_object().unwrap().keys().cloned().collect();
    reward_keys.sort();
    assert_eq!(reward_keys, ["cumulative", "r_dd", "r_ddot", "r_obs", "r_psi", "total"]);
    assert_eq!(value["mode"], "auto");
    assert_eq!(value["v"], 1);
    assert!(value.get("outcome").is_none());
    let last = serde_json::to_value(frames.last().unwrap()).unwrap();
    assert_eq!(last["outcome"], "timeout");
}
