//! Closed-loop evaluation of docking controllers and their tree surrogates.

mod benchmark;
mod dataset;
mod env;
mod error;
mod fidelity;
pub mod io;
mod iterative;
mod report;
mod rollout;
mod source;

pub use benchmark::{build_benchmark, plain_vs_ofs, BenchCase, TimingRow, TimingTable};
pub use dataset::{append_rows, build_dataset, target_of, DatasetBuild, DatasetSidecar};
pub use env::{gen_starting_points, split_starts, Env, EnvConfig, Start, StartSampling, StartSplits, SuccessCriteria};
pub use error::EvalError;
pub use fidelity::{
    action_error, closed_loop_summary, fidelity_report, force_comparison, force_differences, median,
    output_error, paired_actions, path_comparison, reward_comparison, ActionError, ClosedLoopSummary,
    FidelityInputs, FidelityReport, ForceComparison, ForceErrorSummary, OutputError, PathComparison,
    PathTable, RewardComparison,
};
pub use iterative::{iterative_sampling_build, mse, select_best, Iteration, IterationSummary, IterativeBuild};
pub use report::{attribution_frames, developer_report};
pub use rollout::{rollout, Advance, Episode, EpisodeRunner, Outcome, StepRecord, TreePolicy};
pub use source::PolicySource;
