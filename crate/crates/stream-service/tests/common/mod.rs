#![allow(dead_code)]

use evalkit::{Env, Start};
use harbor_env::{Pose, Velocity, ACTION_BOUNDS, N_ACTIONS, N_FEATURES};
use lmt_core::{BuildConfig, BuildMetadata, LeafNode, LmTree, Node, N_COEFS, TREE_FORMAT_VERSION};

/// A fixed single-leaf surrogate that responds to the berth offset and velocities.
pub fn fixed_tree() -> LmTree {
    let mut w = [[0.0; N_COEFS]; N_ACTIONS];
    for (a, row) in w.iter_mut().enumerate() {
        row[0] = 0.002 * (a as f64 + 1.0);
        row[1] = -0.001;
        row[2] = 0.05;
        row[3] = 0.2;
        row[5] = -3.0;
        row[7] = 0.001;
        row[N_FEATURES] = 0.1;
    }
    LmTree {
        format_version: TREE_FORMAT_VERSION,
        feature_names: lmt_core::FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        output_names: lmt_core::OUTPUT_NAMES.iter().map(|s| s.to_string()).collect(),
        output_ranges: ACTION_BOUNDS.iter().map(|b| [b.min, b.max]).collect(),
        root: 0,
        nodes: vec![Node::Leaf(LeafNode {
            coefficients: w,
            n_samples: 0,
            loss: 0.0,
        })],
        metadata: BuildMetadata {
            config: BuildConfig::default(),
            dataset_fingerprint: String::new(),
            n_rows: 0,
            tool_version: "fixture".into(),
            history: Vec::new(),
        },
    }
}

pub fn short_env(max_steps: usize) -> Env {
    let mut env = Env::default();
    env.config.max_steps = max_steps;
    env
}

pub fn moving_start() -> Start {
    Start {
        pose: Pose::new(120.0, 60.0, 1.4),
        velocity: Velocity::new(0.6, 0.1, 0.004),
    }
}
