//! Multi-output linear model trees.
//!
//! A tree routes a nine-dimensional state through axis-aligned threshold tests
//! (`x_F <= t` goes left) to a leaf holding one affine function per output. Trees are
//! grown best-first from a [`Dataset`] of states and normalized black-box actions,
//! either searching every splittable feature at each node or scanning ordered feature
//! groups and using the first group that admits a split.

mod dataset;
mod error;
mod grow;
mod ols;
mod split;
mod tree;

use serde::{Deserialize, Serialize};

pub use dataset::{Dataset, FeatureStats, Features, Targets};
pub use error::LmtError;
pub use grow::{build_best_of, grow, ordered_split, split_rng, training_loss};
pub use ols::{fit_leaf, leaf_loss, predict_leaf, Coefficients, LeafFit, MIN_OLS_ROWS};
pub use split::{best_split, candidate_thresholds, Split};
pub use tree::{
    BranchNode, BuildMetadata, GrowthRecord, LeafNode, LmTree, Node, NodeId, TreeStats,
    TREE_FORMAT_VERSION,
};

pub use harbor_env::FEATURE_NAMES;

pub const N_FEATURES: usize = harbor_env::N_FEATURES;
pub const N_OUTPUTS: usize = harbor_env::N_ACTIONS;
/// Per-output coefficients: one weight per feature plus the intercept (last).
pub const N_COEFS: usize = N_FEATURES + 1;
/// Index of the binary contact flag; never split on and never regressed on.
pub const CONTACT_FEATURE: usize = 6;
/// Feature columns that enter leaf regressions and split search.
pub const REGRESSORS: [usize; 8] = [0, 1, 2, 3, 4, 5, 7, 8];
pub const N_REGRESSORS: usize = REGRESSORS.len();
pub const OUTPUT_NAMES: [&str; N_OUTPUTS] = harbor_env::ACTION_NAMES;

/// How the next leaf to split is chosen from the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    /// Largest `(1 + r)(loss_L + loss_R)` of the leaf's best split.
    #[default]
    PostSplitLoss,
    /// Largest `(1 + r)` times the drop in squared error the split achieves.
    LossDecrease,
}

/// Pose-error, obstacle and velocity features, in scan order.
pub fn default_ordered_groups() -> Vec<Vec<usize>> {
    vec![vec![0, 1, 2], vec![7, 8], vec![3, 4, 5]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    /// Leaf budget.
    pub max_leaves: usize,
    /// Minimum rows on each side of a split.
    pub min_samples: usize,
    /// Grid cells per feature; `n_thresholds - 1` interior thresholds are tried.
    pub n_thresholds: usize,
    /// Random perturbation of thresholds (in grid cells) and of node priority.
    pub jitter: f64,
    /// Feature groups scanned in order; empty searches all splittable features.
    pub ordered_groups: Vec<Vec<usize>>,
    pub rng_seed: u64,
    /// A split must lower the node's mean squared error by more than this.
    pub min_loss_decrease: f64,
    #[serde(default)]
    pub priority: Priority,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            max_leaves: 100,
            min_samples: 100,
            n_thresholds: 25,
            jitter: 0.02,
            ordered_groups: default_ordered_groups(),
            rng_seed: 0,
            min_loss_decrease: 0.0,
            priority: Priority::PostSplitLoss,
        }
    }
}

impl BuildConfig {
    /// Default settings with every splittable feature searched at each node.
    pub fn plain() -> Self {
        BuildConfig {
            ordered_groups: Vec::new(),
            ..Default::default()
        }
    }

    pub fn is_ordered(&self) -> bool {
        !self.ordered_groups.is_empty()
    }

    pub fn validate(&self) -> Result<(), LmtError> {
        let bad = |m: String| Err(LmtError::Config(m));
        if self.max_leaves < 1 {
            return bad("max_leaves must be at least 1".into());
        }
        if self.min_samples < MIN_OLS_ROWS {
            return bad(format!("min_samples must be at least {MIN_OLS_ROWS}"));
        }
        if self.n_thresholds < 2 {
            return bad("n_thresholds must be at least 2".into());
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return bad("jitter must lie in [0, 0.5)".into());
        }
        if !(self.min_loss_decrease >= 0.0 && self.min_loss_decrease.is_finite()) {
            return bad("min_loss_decrease must be a non-negative number".into());
        }
        for g in &self.ordered_groups {
            if g.is_empty() {
                return bad("ordered feature groups must not be empty".into());
            }
            for &f in g {
                if !REGRESSORS.contains(&f) {
                    return bad(format!("feature {f} cannot be split on"));
                }
            }
        }
        Ok(())
    }
}
