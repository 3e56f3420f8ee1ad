//! One function per subcommand.

use evalkit::{
    attribution_frames, build_benchmark, build_dataset, developer_report, fidelity_report,
    gen_starting_points, iterative_sampling_build, plain_vs_ofs, rollout, select_best, split_starts,
    Env, Episode, EpisodeRunner, FidelityInputs, Outcome, Start, StartSampling, StartSplits, TreePolicy,
};
use harbor_env::{HarborGeometry, Pose, RewardParams, Velocity, VesselModel, FEATURE_NAMES};
use lmt_core::{default_ordered_groups, grow, BuildConfig, Dataset, Features, LmTree, OUTPUT_NAMES};
use policy::Policy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use stream_service::{LoadedScenario, ScenarioConfig};

use crate::args::*;
use crate::manifest::Run;
use crate::CliError;

/// `starts.json`: sampled starting points with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartsFile {
    pub tool_version: String,
    pub env_fingerprint: String,
    pub sampling: StartSampling,
    #[serde(flatten)]
    pub splits: StartSplits,
}

impl StartsFile {
    fn split(&self, which: SplitName) -> Vec<Start> {
        let s = &self.splits;
        match which {
            SplitName::Train => s.train.clone(),
            SplitName::Val => s.val.clone(),
            SplitName::Test => s.test.clone(),
            SplitName::All => s.train.iter().chain(&s.val).chain(&s.test).copied().collect(),
        }
    }
}

pub(crate) fn dispatch(out: &Path, command: Command) -> Result<(), CliError> {
    let mut run = Run::new(out, command.name())?;
    match command {
        Command::GenStarts(a) => gen_starts(&mut run, a)?,
        Command::GenData(a) => gen_data(&mut run, a)?,
        Command::Build(a) => build(&mut run, a)?,
        Command::BuildIterative(a) => build_iterative(&mut run, a)?,
        Command::Eval(a) => return eval(run, a),
        Command::Bench(a) => bench(&mut run, a)?,
        Command::Rollout(a) => rollout_cmd(&mut run, a)?,
        Command::Plot(a) => plot(&mut run, a)?,
        Command::Serve(a) => return serve(run, a),
    }
    run.finish()?;
    Ok(())
}

fn require(run: &mut Run, path: &Path) -> Result<(), CliError> {
    run.input(path)
}

fn summary(value: serde_json::Value) {
    println!("{value}");
}

fn env_flags_given(a: &EnvArgs) -> bool {
    a.env_file.is_some()
        || a.harbor.is_some()
        || a.vessel.is_some()
        || a.reward.is_some()
        || a.h.is_some()
        || a.max_steps.is_some()
        || a.pos_tol.is_some()
        || a.head_tol_deg.is_some()
        || a.vel_tol.is_some()
        || a.hold_steps.is_some()
}

fn apply_env(mut env: Env, a: &EnvArgs) -> Result<Env, CliError> {
    if let Some(p) = &a.env_file {
        env = evalkit::io::read_json(p)?;
    }
    if let Some(p) = &a.harbor {
        env.geometry = HarborGeometry::load(p)?;
    }
    if let Some(p) = &a.vessel {
        env.vessel = VesselModel::load(p)?;
    }
    if let Some(p) = &a.reward {
        env.reward = RewardParams::load(p)?;
    }
    let c = &mut env.config;
    c.h = a.h.unwrap_or(c.h);
    c.max_steps = a.max_steps.unwrap_or(c.max_steps);
    c.success.pos_tol = a.pos_tol.unwrap_or(c.success.pos_tol);
    c.success.head_tol = a.head_tol_deg.map_or(c.success.head_tol, f64::to_radians);
    c.success.vel_tol = a.vel_tol.unwrap_or(c.success.vel_tol);
    c.success.hold_steps = a.hold_steps.unwrap_or(c.success.hold_steps);
    env.validate()?;
    Ok(env)
}

/// Default environment with the files and overrides in `a` applied, validated.
pub fn resolve_env(a: &EnvArgs) -> Result<Env, CliError> {
    apply_env(Env::default(), a)
}

fn record_env(run: &mut Run, a: &EnvArgs) -> Result<Env, CliError> {
    for p in [&a.env_file, &a.harbor, &a.vessel, &a.reward].into_iter().flatten() {
        require(run, p)?;
    }
    let env = resolve_env(a)?;
    run.env_fingerprint(env.fingerprint());
    Ok(env)
}

/// Build settings from defaults, the optional config file and flags, validated.
pub fn resolve_build_config(a: &TreeArgs) -> Result<BuildConfig, CliError> {
    let mut cfg = match &a.build_config {
        Some(p) => evalkit::io::read_json(p)?,
        None => BuildConfig::default(),
    };
    cfg.max_leaves = a.leaves.unwrap_or(cfg.max_leaves);
    cfg.min_samples = a.min_samples.unwrap_or(cfg.min_samples);
    cfg.n_thresholds = a.n_thresholds.unwrap_or(cfg.n_thresholds);
    cfg.jitter = a.jitter.unwrap_or(cfg.jitter);
    cfg.rng_seed = a.seed.unwrap_or(cfg.rng_seed);
    if a.no_ofs {
        cfg.ordered_groups.clear();
    } else if a.ofs && cfg.ordered_groups.is_empty() {
        cfg.ordered_groups = default_ordered_groups();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn record_build(run: &mut Run, a: &TreeArgs) -> Result<BuildConfig, CliError> {
    if let Some(p) = &a.build_config {
        require(run, p)?;
    }
    let cfg = resolve_build_config(a)?;
    run.seed("build", cfg.rng_seed);
    Ok(cfg)
}

fn load_starts(run: &mut Run, path: &Path) -> Result<StartsFile, CliError> {
    require(run, path)?;
    let file: StartsFile = evalkit::io::read_json(path)?;
    run.seed("starts", file.splits.seed);
    Ok(file)
}

fn load_policy(run: &mut Run, source: &evalkit::PolicySource) -> Result<Box<dyn Policy>, CliError> {
    match source {
        evalkit::PolicySource::Baseline { gains: Some(p) } | evalkit::PolicySource::Mlp { weights: p } => {
            require(run, p)?
        }
        evalkit::PolicySource::Baseline { gains: None } => {}
    }
    Ok(source.load()?)
}

fn load_tree(run: &mut Run, path: &Path) -> Result<LmTree, CliError> {
    require(run, path)?;
    Ok(LmTree::load(path)?)
}

fn write_json<T: Serialize + ?Sized>(run: &mut Run, name: &str, value: &T) -> Result<std::path::PathBuf, CliError> {
    let path = run.path(name);
    evalkit::io::write_json(&path, value)?;
    run.output(&path)?;
    Ok(path)
}

fn gen_starts(run: &mut Run, a: GenStartsArgs) -> Result<(), CliError> {
    let env = record_env(run, &a.env)?;
    let mut sampling = StartSampling::default();
    if let Some(c) = a.clearance {
        sampling.clearance = c;
    }
    run.seed("starts", a.seed);
    run.config(&serde_json::json!({ "n": a.n, "sampling": sampling, "env": env }));
    let starts = gen_starting_points(a.n, a.seed, &env.geometry, &sampling)?;
    let file = StartsFile {
        tool_version: evalkit::io::TOOL_VERSION.to_string(),
        env_fingerprint: env.fingerprint(),
        sampling,
        splits: split_starts(starts, a.seed),
    };
    let path = write_json(run, "starts.json", &file)?;
    let s = &file.splits;
    summary(serde_json::json!({
        "starts": path, "train": s.train.len(), "val": s.val.len(), "test": s.test.len()
    }));
    Ok(())
}

fn gen_data(run: &mut Run, a: GenDataArgs) -> Result<(), CliError> {
    let env = record_env(run, &a.env)?;
    let file = load_starts(run, &a.starts)?;
    let controller = load_policy(run, &a.policy)?;
    let starts = file.split(a.split);
    run.config(&serde_json::json!({
        "policy": a.policy, "split": format!("{:?}", a.split).to_lowercase(), "env": env
    }));
    let built = build_dataset(controller.as_ref(), &starts, &env)?;
    let csv = run.path("dataset.csv");
    built.data.save_csv(&csv)?;
    run.output(&csv)?;
    write_json(run, "dataset.json", &built.sidecar)?;
    if a.keep_episodes {
        let dir = run.path("episodes");
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (k, ep) in built.episodes.iter().enumerate() {
            evalkit::io::save_episode(ep, &dir.join(format!("{k:04}.ndjson")))?;
        }
    }
    summary(serde_json::json!({
        "dataset": csv, "rows": built.sidecar.n_rows, "episodes": built.sidecar.n_episodes,
        "outcomes": built.sidecar.outcomes
    }));
    Ok(())
}

fn build(run: &mut Run, a: BuildArgs) -> Result<(), CliError> {
    require(run, &a.data)?;
    let cfg = record_build(run, &a.tree)?;
    run.config(&cfg);
    let data = Dataset::load_csv(&a.data)?;
    let tree = grow(&data, &cfg)?;
    let path = run.path("tree.json");
    tree.save(&path)?;
    run.output(&path)?;
    summary(serde_json::json!({
        "tree": path, "leaves": tree.n_leaves(), "rows": data.len(),
        "training_mse": lmt_core::training_loss(&tree, &data)
    }));
    Ok(())
}

fn build_iterative(run: &mut Run, a: BuildIterativeArgs) -> Result<(), CliError> {
    let env = record_env(run, &a.env)?;
    let cfg = record_build(run, &a.tree)?;
    let file = load_starts(run, &a.starts)?;
    let controller = load_policy(run, &a.policy)?;
    run.config(&serde_json::json!({
        "policy": a.policy, "iterations": a.iterations, "build": cfg, "env": env
    }));
    let validation = build_dataset(controller.as_ref(), &file.splits.val, &env)?.data;
    let iterations = iterative_sampling_build(controller.as_ref(), &env, &file.splits.train, &cfg, a.iterations)?;
    let result = select_best(iterations, &validation)?;
    for it in &result.iterations {
        let path = run.path(&format!("tree-iter-{}.json", it.index));
        it.tree.save(&path)?;
        run.output(&path)?;
    }
    let best = &result.iterations[result.best];
    let path = run.path("tree.json");
    best.tree.save(&path)?;
    run.output(&path)?;
    let report = serde_json::json!({
        "tool_version": evalkit::io::TOOL_VERSION,
        "best_iteration": best.index,
        "iterations": result.summaries,
    });
    write_json(run, "iterations.json", &report)?;
    summary(serde_json::json!({ "tree": path, "best_iteration": best.index, "leaves": best.tree.n_leaves() }));
    Ok(())
}

/// Header of a dataset CSV, split into feature and output names.
fn dataset_schema(path: &Path) -> Result<(Vec<String>, Vec<String>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let header: Vec<String> = text.lines().next().unwrap_or("").split(',').map(|s| s.trim().to_string()).collect();
    let n = FEATURE_NAMES.len().min(header.len());
    Ok((header[..n].to_vec(), header[n..].to_vec()))
}

fn check_schema(tree: &LmTree, features: &[String], outputs: &[String], source: &str) -> Result<(), CliError> {
    if tree.feature_names != features || tree.output_names != outputs {
        return Err(CliError::Config(format!(
            "tree schema {:?} -> {:?} differs from {source} schema {:?} -> {:?}",
            tree.feature_names, tree.output_names, features, outputs
        )));
    }
    Ok(())
}

fn eval(mut run: Run, a: EvalArgs) -> Result<(), CliError> {
    let env = record_env(&mut run, &a.env)?;
    let tree = load_tree(&mut run, &a.tree)?;
    let controller = load_policy(&mut run, &a.policy)?;
    let starts_file = a.starts.as_deref().map(|p| load_starts(&mut run, p)).transpose()?;
    let states: Vec<Features> = match (&a.data, &starts_file) {
        (Some(data), _) => {
            require(&mut run, data)?;
            let (features, outputs) = dataset_schema(data)?;
            check_schema(&tree, &features, &outputs, "dataset")?;
            Dataset::load_csv(data)?.features
        }
        (None, Some(file)) => {
            let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
            check_schema(&tree, &own(&FEATURE_NAMES), &own(&OUTPUT_NAMES), "environment")?;
            let episodes: Vec<Episode> = file
                .splits
                .test
                .par_iter()
                .map(|s| rollout(controller.as_ref(), None, &env, s))
                .collect::<Result<_, _>>()?;
            episodes.iter().flat_map(|ep| ep.steps.iter().map(|s| s.state.to_array())).collect()
        }
        (None, None) => return Err(CliError::Config("eval needs --data or --starts".into())),
    };
    let closed_loop: Vec<Start> = match &starts_file {
        Some(f) => f.splits.test.iter().take(a.closed_loop).copied().collect(),
        None => Vec::new(),
    };
    run.seed("eval", a.seed);
    run.config(&serde_json::json!({
        "policy": a.policy, "n_states": states.len(), "closed_loop_starts": closed_loop.len(),
        "thresholds": { "max_mae_pct": a.max_mae_pct, "min_agreement": a.min_agreement,
                        "max_reward_gap": a.max_reward_gap },
        "env": env
    }));
    let surrogate = TreePolicy::new(tree);
    let report = fidelity_report(
        &surrogate,
        controller.as_ref(),
        FidelityInputs {
            env: &env,
            states: &states,
            starts: &closed_loop,
            seed: a.seed,
        },
    )?;
    let path = write_json(&mut run, "fidelity.json", &report)?;

    let mut failed = Vec::new();
    let worst = report.output_error.worst_mae_pct();
    if worst > a.max_mae_pct {
        failed.push(format!("worst action MAE {worst:.3}% > {}%", a.max_mae_pct));
    }
    if let Some(cl) = &report.closed_loop {
        if cl.outcome_agreement < a.min_agreement {
            failed.push(format!("outcome agreement {:.3} < {}", cl.outcome_agreement, a.min_agreement));
        }
        match cl.median_relative_reward_gap {
            Some(g) if g <= a.max_reward_gap => {}
            Some(g) => failed.push(format!("median reward gap {g:.3} > {}", a.max_reward_gap)),
            None => failed.push("no agreeing runs to compare rewards on".into()),
        }
    }
    summary(serde_json::json!({
        "fidelity": path, "worst_mae_pct": worst,
        "outcome_agreement": report.closed_loop.as_ref().map(|c| c.outcome_agreement),
        "median_reward_gap": report.closed_loop.as_ref().and_then(|c| c.median_relative_reward_gap),
        "failed": failed
    }));
    run.finish()?;
    if a.assert && !failed.is_empty() {
        return Err(CliError::Threshold(failed));
    }
    Ok(())
}

fn bench(run: &mut Run, a: BenchArgs) -> Result<(), CliError> {
    require(run, &a.data)?;
    let mut base = record_build(run, &a.tree_args())?;
    if base.ordered_groups.is_empty() {
        base.ordered_groups = default_ordered_groups();
    }
    if a.leaf_budgets.is_empty() {
        return Err(CliError::Config("--leaves needs at least one budget".into()));
    }
    let cases = plain_vs_ofs(&a.leaf_budgets, &base);
    run.config(&serde_json::json!({ "repeats": a.repeats, "cases": cases }));
    let data = Dataset::load_csv(&a.data)?;
    let table = build_benchmark(&data, &cases, a.repeats)?;
    let path = write_json(run, "timings.json", &table)?;
    let ratios: serde_json::Map<String, serde_json::Value> = a
        .leaf_budgets
        .iter()
        .map(|n| (n.to_string(), serde_json::json!(table.ratio(&format!("ofs-{n}"), &format!("plain-{n}")))))
        .collect();
    summary(serde_json::json!({ "timings": path, "rows": data.len(), "ofs_over_plain": ratios }));
    Ok(())
}

fn rollout_cmd(run: &mut Run, a: RolloutArgs) -> Result<(), CliError> {
    let env = record_env(run, &a.env)?;
    let controller = load_policy(run, &a.policy)?;
    let surrogate = a.tree.as_deref().map(|p| load_tree(run, p)).transpose()?.map(TreePolicy::new);
    let start = match (&a.pose, &a.starts) {
        (Some(p), _) => {
            let v = a.velocity.clone().unwrap_or_else(|| vec![0.0; 3]);
            if p.len() != 3 || v.len() != 3 {
                return Err(CliError::Config("--pose and --velocity take three comma-separated numbers".into()));
            }
            Start {
                pose: Pose::new(p[0], p[1], p[2]),
                velocity: Velocity::new(v[0], v[1], v[2]),
            }
        }
        (None, Some(path)) => {
            let starts = load_starts(run, path)?.split(a.split);
            *starts.get(a.index).ok_or_else(|| {
                CliError::Config(format!("start index {} out of range ({} starts)", a.index, starts.len()))
            })?
        }
        (None, None) => return Err(CliError::Config("rollout needs --pose or --starts".into())),
    };
    if a.drive == Driver::Tree && surrogate.is_none() {
        return Err(CliError::Config("--drive tree needs --tree".into()));
    }
    run.config(&serde_json::json!({
        "policy": a.policy, "drive": format!("{:?}", a.drive).to_lowercase(), "start": start, "env": env
    }));

    let mut runner = EpisodeRunner::new(&env, &start);
    let mut steps = Vec::new();
    let mut outcome = Outcome::Timeout;
    while !runner.is_done() {
        let state = runner.observe();
        if !state.is_finite() {
            outcome = Outcome::Diverged;
            break;
        }
        let action = controller.predict(&state)?.clamp();
        let shadow = surrogate.as_ref().map(|s| s.predict(&state)).transpose()?.map(|a| a.clamp());
        let active = match (a.drive, shadow) {
            (Driver::Tree, Some(s)) => s,
            _ => action,
        };
        let adv = runner.advance(&state, action, shadow, active)?;
        steps.push(adv.record);
        if let Some(o) = adv.outcome {
            outcome = o;
        }
    }
    let driver_name = match (a.drive, &surrogate) {
        (Driver::Tree, Some(s)) => s.name().to_string(),
        _ => controller.name().to_string(),
    };
    let ep = Episode {
        controller: driver_name,
        start,
        h: env.config.h,
        cumulative_reward: steps.iter().map(|s| s.reward_total).sum(),
        steps,
        outcome,
    };
    let path = run.path("episode.ndjson");
    evalkit::io::save_episode(&ep, &path)?;
    run.output(&path)?;
    summary(serde_json::json!({
        "episode": path, "steps": ep.len(), "outcome": ep.outcome, "cumulative_reward": ep.cumulative_reward
    }));
    Ok(())
}

fn plot(run: &mut Run, a: PlotArgs) -> Result<(), CliError> {
    require(run, &a.episode)?;
    let tree = load_tree(run, &a.tree)?;
    let ep = evalkit::io::load_episode(&a.episode)?;
    run.config(&serde_json::json!({ "episode": a.episode, "tree": a.tree }));
    let svg = developer_report(&ep, &attribution_frames(&tree, &ep))?;
    let path = run.path("report.svg");
    std::fs::write(&path, svg).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    run.output(&path)?;
    summary(serde_json::json!({ "report": path, "steps": ep.len() }));
    Ok(())
}

fn serve(mut run: Run, a: ServeArgs) -> Result<(), CliError> {
    let mut cfg = match &a.scenario {
        Some(p) => {
            require(&mut run, p)?;
            ScenarioConfig::load(p)?
        }
        None => {
            let tree = a
                .tree
                .clone()
                .ok_or_else(|| CliError::Config("serve needs --scenario or --tree".into()))?;
            ScenarioConfig::new(a.policy.clone().unwrap_or(evalkit::PolicySource::Baseline { gains: None }), tree)
        }
    };
    if let Some(p) = &a.policy {
        cfg.policy = p.clone();
    }
    if let Some(t) = &a.tree {
        cfg.tree = t.clone();
    }
    if let Some(d) = &a.static_dir {
        cfg.static_dir = Some(d.clone());
    }
    if let Some(s) = a.speed {
        cfg.realtime_factor = s;
    }
    cfg.start_paused |= a.start_paused;
    if env_flags_given(&a.env) {
        cfg.env = apply_env(cfg.env, &a.env)?;
    }
    require(&mut run, &cfg.tree)?;
    run.env_fingerprint(cfg.env.fingerprint());
    run.config(&serde_json::json!({ "addr": a.addr, "scenario": cfg }));
    let scenario = LoadedScenario::load(cfg)?;
    run.finish()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|source| CliError::Io {
            path: "runtime".into(),
            source,
        })?;
    runtime.block_on(stream_service::serve(&a.addr, scenario))?;
    Ok(())
}
