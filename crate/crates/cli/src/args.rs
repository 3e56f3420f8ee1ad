//! Command-line flags.

use clap::{Args, Parser, Subcommand, ValueEnum};
use evalkit::PolicySource;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "lmtdock", version, about = "Tree surrogates for docking controllers: data, builds, evaluation and live sessions")]
pub struct Cli {
    /// Directory receiving artifacts and `run-manifest.json`.
    #[arg(long, global = true, env = "LMTDOCK_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for rollouts and builds (all cores when omitted).
    #[arg(long, global = true, env = "LMTDOCK_JOBS")]
    pub jobs: Option<usize>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample starting points and split them into train, validation and test sets.
    GenStarts(GenStartsArgs),
    /// Roll out a controller from starting points and write the training dataset.
    GenData(GenDataArgs),
    /// Grow a tree on a dataset.
    Build(BuildArgs),
    /// Grow trees with iterative data sampling and keep the best on the validation set.
    BuildIterative(BuildIterativeArgs),
    /// Compare a tree against its controller: output, force and closed-loop errors.
    Eval(EvalArgs),
    /// Time plain against ordered split search.
    Bench(BenchArgs),
    /// Run one episode and record every step.
    Rollout(RolloutArgs),
    /// Render the developer report of a recorded episode.
    Plot(PlotArgs),
    /// Run a live session and stream it to consoles.
    Serve(ServeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenStarts(_) => "gen-starts",
            Command::GenData(_) => "gen-data",
            Command::Build(_) => "build",
            Command::BuildIterative(_) => "build-iterative",
            Command::Eval(_) => "eval",
            Command::Bench(_) => "bench",
            Command::Rollout(_) => "rollout",
            Command::Plot(_) => "plot",
            Command::Serve(_) => "serve",
        }
    }
}

/// Simulation settings: a full environment file, per-part files and numeric overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct EnvArgs {
    /// Complete environment (harbor, vessel, reward, episode settings) as JSON.
    #[arg(long = "env")]
    pub env_file: Option<PathBuf>,
    /// Harbor geometry JSON.
    #[arg(long)]
    pub harbor: Option<PathBuf>,
    /// Vessel model JSON.
    #[arg(long)]
    pub vessel: Option<PathBuf>,
    /// Reward parameters JSON.
    #[arg(long)]
    pub reward: Option<PathBuf>,
    /// Integration step (s).
    #[arg(long)]
    pub h: Option<f64>,
    /// Step budget per episode.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Berthing position tolerance (m).
    #[arg(long)]
    pub pos_tol: Option<f64>,
    /// Berthing heading tolerance (degrees).
    #[arg(long)]
    pub head_tol_deg: Option<f64>,
    /// Berthing speed tolerance (m/s).
    #[arg(long)]
    pub vel_tol: Option<f64>,
    /// Consecutive settled steps required to count as berthed.
    #[arg(long)]
    pub hold_steps: Option<usize>,
}

/// Tree growth settings. Flags override the optional config file, which overrides
/// the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct TreeArgs {
    /// Base build settings as JSON.
    #[arg(long)]
    pub build_config: Option<PathBuf>,
    /// Leaf budget.
    #[arg(long)]
    pub leaves: Option<usize>,
    /// Minimum rows on each side of a split.
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// Threshold grid cells per feature.
    #[arg(long)]
    pub n_thresholds: Option<usize>,
    /// Threshold and priority jitter, in grid cells.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Seed of all split randomness.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ordered feature splitting (the default).
    #[arg(long, overrides_with = "no_ofs")]
    pub ofs: bool,
    /// Search every splittable feature at each node.
    #[arg(long, overrides_with = "ofs")]
    pub no_ofs: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenStartsArgs {
    /// Number of starting points.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum distance from the dock boundary (m).
    #[arg(long)]
    pub clearance: Option<f64>,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitName {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    /// `baseline`, `baseline:<gains.json>` or `mlp:<weights.json>`.
    #[arg(long, default_value = "baseline")]
    pub policy: PolicySource,
    /// Starting points written by `gen-starts`.
    #[arg(long)]
    pub starts: PathBuf,
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitName,
    /// Also write every episode as `episodes/<k>.ndjson`.
    #[arg(long)]
    pub keep_episodes: bool,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Dataset CSV written by `gen-data`.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub tree: TreeArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BuildIterativeArgs {
    #[arg(long, default_value = "baseline")]
    pub policy: PolicySource,
    #[arg(long)]
    pub starts: PathBuf,
    /// Sampling rounds.
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long, default_value = "baseline")]
    pub policy: PolicySource,
    /// Starting points; states come from the controller's runs on the test split.
    #[arg(long)]
    pub starts: Option<PathBuf>,
    /// Evaluate on the states of this dataset instead.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test starts used for the closed-loop comparison (0 skips it).
    #[arg(long, default_value_t = 50)]
    pub closed_loop: usize,
    /// Recorded in the report.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exit with status 1 when a threshold below is not met.
    #[arg(long)]
    pub assert: bool,
    /// Largest accepted per-action MAE, in percent of the action range.
    #[arg(long, default_value_t = 5.0)]
    pub max_mae_pct: f64,
    /// Smallest accepted closed-loop outcome agreement.
    #[arg(long, default_value_t = 0.8)]
    pub min_agreement: f64,
    /// Largest accepted median relative reward gap.
    #[arg(long, default_value_t = 0.15)]
    pub max_reward_gap: f64,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Leaf budgets, comma separated.
    #[arg(long = "leaves", value_delimiter = ',', default_value = "10,50")]
    pub leaf_budgets: Vec<usize>,
    /// Timed builds per configuration.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Base build settings as JSON; ordered groups default when absent.
    #[arg(long)]
    pub build_config: Option<PathBuf>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long)]
    pub n_thresholds: Option<usize>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl BenchArgs {
    /// Growth settings shared by every timed case.
    pub fn tree_args(&self) -> TreeArgs {
        TreeArgs {
            build_config: self.build_config.clone(),
            min_samples: self.min_samples,
            n_thresholds: self.n_thresholds,
            jitter: self.jitter,
            seed: self.seed,
            ofs: true,
            ..TreeArgs::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Driver {
    Policy,
    Tree,
}

#[derive(Debug, Clone, Args)]
pub struct RolloutArgs {
    #[arg(long, default_value = "baseline")]
    pub policy: PolicySource,
    /// Surrogate tree; recorded alongside the controller and required by `plot`.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Which controller moves the vessel.
    #[arg(long, value_enum, default_value = "policy")]
    pub drive: Driver,
    /// Starting points file; used with `--split` and `--index`.
    #[arg(long, conflicts_with = "pose")]
    pub starts: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitName,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Start pose `x,y,psi` (m, m, rad).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub pose: Option<Vec<f64>>,
    /// Start velocity `u,v,r` (m/s, m/s, rad/s).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "pose")]
    pub velocity: Option<Vec<f64>>,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Episode recorded by `rollout --tree`.
    #[arg(long)]
    pub episode: PathBuf,
    #[arg(long)]
    pub tree: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Scenario file; flags below override its fields.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<PolicySource>,
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, env = "LMTDOCK_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Console bundle served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Simulated seconds per wall-clock second.
    #[arg(long)]
    pub speed: Option<f64>,
    /// Wait for a client's `resume` before the first step.
    #[arg(long)]
    pub start_paused: bool,
    #[command(flatten)]
    pub env: EnvArgs,
}
