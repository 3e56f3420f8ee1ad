//! Best-first tree growth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ols::{fit_leaf, LeafFit};
use crate::split::{best_split, Split};
use crate::tree::{BranchNode, BuildMetadata, GrowthRecord, LeafNode, LmTree, Node, NodeId};
use crate::{
    BuildConfig, Dataset, LmtError, Priority, FEATURE_NAMES, N_OUTPUTS, OUTPUT_NAMES, REGRESSORS,
    TREE_FORMAT_VERSION,
};

/// Random stream used for the threshold grid of `group` at `node`.
///
/// Each node and group gets its own stream so any node's search can be replayed
/// independently of the order in which the tree was grown.
pub fn split_rng(seed: u64, node: NodeId, group: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + ((node as u64) << 8) + group as u64);
    rng
}

fn priority_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Best split of a node under the configured search mode.
///
/// Plain mode searches every splittable feature. Ordered mode scans the groups in
/// order and returns the best split of the first group that has one, along with that
/// group's index.
pub fn ordered_split(
    data: &Dataset,
    rows: &[usize],
    parent_loss: f64,
    cfg: &BuildConfig,
    node: NodeId,
) -> Result<Option<(usize, Split)>, LmtError> {
    if !cfg.is_ordered() {
        let mut rng = split_rng(cfg.rng_seed, node, 0);
        return Ok(best_split(data, rows, parent_loss, &REGRESSORS, cfg, &mut rng)?
            .map(|s| (0, s)));
    }
    for (g, group) in cfg.ordered_groups.iter().enumerate() {
        let mut rng = split_rng(cfg.rng_seed, node, g);
        if let Some(s) = best_split(data, rows, parent_loss, group, cfg, &mut rng)? {
            return Ok(Some((g, s)));
        }
    }
    Ok(None)
}

struct FrontierLeaf {
    node: NodeId,
    fit: LeafFit,
    split: Option<Split>,
}

fn leaf_node(fit: &LeafFit) -> Node {
    Node::Leaf(LeafNode {
        coefficients: fit.coefficients,
        n_samples: fit.n_samples,
        loss: fit.loss,
    })
}

/// Grows a tree on `data` until the leaf budget is reached or no leaf admits a split.
pub fn grow(data: &Dataset, cfg: &BuildConfig) -> Result<LmTree, LmtError> {
    cfg.validate()?;
    data.validate()?;
    if data.len() < 2 * cfg.min_samples {
        return Err(LmtError::Build(format!(
            "dataset has {} rows, at least {} required",
            data.len(),
            2 * cfg.min_samples
        )));
    }
    let n_rows = data.len();
    let denom = (n_rows * N_OUTPUTS) as f64;
    let all: Vec<usize> = (0..n_rows).collect();
    let root_fit = fit_leaf(data, &all)?;
    let mut total_sse = root_fit.sse();
    let mut nodes = vec![leaf_node(&root_fit)];
    let mut history = vec![GrowthRecord {
        n_leaves: 1,
        split_node: None,
        feature: None,
        threshold: None,
        training_loss: total_sse / denom,
    }];

    let mut frontier = Vec::new();
    if cfg.max_leaves > 1 {
        let split = ordered_split(data, &all, root_fit.loss, cfg, 0)?.map(|(_, s)| s);
        frontier.push(FrontierLeaf {
            node: 0,
            fit: root_fit,
            split,
        });
    }
    drop(all);

    let mut rng = priority_rng(cfg.rng_seed);
    let mut n_leaves = 1;
    while n_leaves < cfg.max_leaves {
        let mut best: Option<(usize, f64)> = None;
        for (i, leaf) in frontier.iter().enumerate() {
            let Some(split) = &leaf.split else { continue };
            let r = if cfg.jitter > 0.0 {
                rng.random_range(-cfg.jitter..=cfg.jitter)
            } else {
                0.0
            };
            let base = match cfg.priority {
                Priority::PostSplitLoss => split.combined_loss(),
                Priority::LossDecrease => split.loss_decrease(leaf.fit.loss),
            };
            let score = (1.0 + r) * base;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let Some((i, _)) = best else { break };
        let leaf = frontier.remove(i);
        let split = leaf.split.expect("selected leaf has a split");

        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(leaf_node(&split.left));
        nodes.push(leaf_node(&split.right));
        nodes[leaf.node] = Node::Branch(BranchNode {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        });
        n_leaves += 1;
        total_sse += split.left.sse() + split.right.sse() - leaf.fit.sse();
        history.push(GrowthRecord {
            n_leaves,
            split_node: Some(leaf.node),
            feature: Some(split.feature),
            threshold: Some(split.threshold),
            training_loss: total_sse.max(0.0) / denom,
        });

        if n_leaves < cfg.max_leaves {
            let Split {
                left_rows,
                right_rows,
                left: left_fit,
                right: right_fit,
                ..
            } = split;
            let (ls, rs) = rayon::join(
                || ordered_split(data, &left_rows, left_fit.loss, cfg, left),
                || ordered_split(data, &right_rows, right_fit.loss, cfg, right),
            );
            frontier.push(FrontierLeaf {
                node: left,
                fit: left_fit,
                split: ls?.map(|(_, s)| s),
            });
            frontier.push(FrontierLeaf {
                node: right,
                fit: right_fit,
                split: rs?.map(|(_, s)| s),
            });
        }
    }

    let tree = LmTree {
        format_version: TREE_FORMAT_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        output_names: OUTPUT_NAMES.iter().map(|s| s.to_string()).collect(),
        output_ranges: harbor_env::ACTION_BOUNDS
            .iter()
            .map(|b| [b.min, b.max])
            .collect(),
        root: 0,
        nodes,
        metadata: BuildMetadata {
            config: cfg.clone(),
            dataset_fingerprint: data.fingerprint(),
            n_rows,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            history,
        },
    };
    tree.validate()?;
    Ok(tree)
}

/// Mean squared error of the tree over all rows and outputs of `data`.
pub fn training_loss(tree: &LmTree, data: &Dataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    // per-row terms are collected first so the summation order never depends on
    // how the work was scheduled
    let per_row: Vec<f64> = data
        .features
        .par_iter()
        .zip(&data.targets)
        .map(|(x, y)| {
            tree.predict(x)
                .iter()
                .zip(y)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
        })
        .collect();
    let sse: f64 = per_row.iter().sum();
    sse / (data.len() * N_OUTPUTS) as f64
}

/// Builds `k` trees with consecutive seeds starting at `cfg.rng_seed` and keeps the
/// one with the lowest training loss (ties go to the lower seed).
pub fn build_best_of(data: &Dataset, cfg: &BuildConfig, k: usize) -> Result<LmTree, LmtError> {
    if k == 0 {
        return Err(LmtError::Config("best-of count must be at least 1".into()));
    }
    let trees: Vec<LmTree> = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            let c = BuildConfig {
                rng_seed: cfg.rng_seed.wrapping_add(i),
                ..cfg.clone()
            };
            grow(data, &c)
        })
        .collect::<Result<_, _>>()?;
    let loss = |t: &LmTree| t.metadata.history.last().map_or(f64::INFINITY, |h| h.training_loss);
    Ok(trees
        .into_iter()
        .reduce(|a, b| if loss(&b) < loss(&a) { b } else { a })
        .expect("k >= 1"))
}
