//! Grid search for the best axis-aligned split of a node.

use rand::Rng;
use rayon::prelude::*;

use crate::ols::{fit_leaf, solve, LeafFit, Scaling, SuffStats};
use crate::{BuildConfig, Dataset, LmtError, N_OUTPUTS};

/// Guards the "loss decreases" test against round-off once a node fits exactly.
const DECREASE_REL_EPS: f64 = 1e-12;
/// A decrease below this fraction of the node's mean squared target is round-off:
/// the node already fits exactly and is not split further.
const EXACT_FIT_REL: f64 = 1e-10;

/// Grid thresholds strictly inside `(min, max)` of the values, each jittered by up to
/// `jitter` grid cells. Empty when the values are constant.
pub fn candidate_thresholds<R: Rng + ?Sized>(
    values: impl IntoIterator<Item = f64>,
    n_thresholds: usize,
    jitter: f64,
    rng: &mut R,
) -> Vec<f64> {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo < hi) || n_thresholds < 2 {
        return Vec::new();
    }
    let cell = (hi - lo) / n_thresholds as f64;
    (1..n_thresholds)
        .map(|n| {
            let r = if jitter > 0.0 {
                rng.random_range(-jitter..=jitter)
            } else {
                0.0
            };
            lo + (n as f64 + r) * cell
        })
        .filter(|t| *t > lo && *t < hi)
        .collect()
}

/// A scored candidate before exact refitting.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    combined: f64,
}

/// The chosen split of a node with exact child fits.
#[derive(Debug, Clone)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left_rows: Vec<usize>,
    pub right_rows: Vec<usize>,
    pub left: LeafFit,
    pub right: LeafFit,
}

impl Split {
    /// `loss(D_L) + loss(D_R)`, the quantity minimized by the search.
    pub fn combined_loss(&self) -> f64 {
        self.left.loss + self.right.loss
    }

    /// Drop in node-level mean squared error, weighting children by their size.
    pub fn loss_decrease(&self, parent_loss: f64) -> f64 {
        let n = (self.left.n_samples + self.right.n_samples) as f64;
        parent_loss - (self.left.sse() + self.right.sse()) / (n * N_OUTPUTS as f64)
    }
}

/// Thresholds a split's loss decrease must exceed.
#[derive(Debug, Clone, Copy)]
struct Floor {
    parent_loss: f64,
    target_power: f64,
    min_loss_decrease: f64,
}

impl Floor {
    fn new(data: &Dataset, rows: &[usize], parent_loss: f64, cfg: &BuildConfig) -> Self {
        let power: f64 = rows
            .iter()
            .map(|&i| data.targets[i].iter().map(|y| y * y).sum::<f64>())
            .sum();
        Floor {
            parent_loss,
            target_power: power / (rows.len().max(1) * N_OUTPUTS) as f64,
            min_loss_decrease: cfg.min_loss_decrease,
        }
    }

    fn admits(&self, decrease: f64) -> bool {
        decrease > self.min_loss_decrease
            && decrease > self.parent_loss * DECREASE_REL_EPS
            && decrease > self.target_power * EXACT_FIT_REL
    }
}

fn score_feature(
    data: &Dataset,
    rows: &[usize],
    scaling: &Scaling,
    feature: usize,
    thresholds: &[f64],
    floor: &Floor,
    cfg: &BuildConfig,
) -> Vec<Candidate> {
    let mut bins = vec![SuffStats::default(); thresholds.len() + 1];
    for &i in rows {
        let x = &data.features[i];
        let b = thresholds.partition_point(|t| *t < x[feature]);
        bins[b].add(&scaling.apply(x), &data.targets[i]);
    }
    let mut total = SuffStats::default();
    for b in &bins {
        total.merge(b);
    }
    let n = rows.len() as f64;
    let mut left = SuffStats::default();
    let mut out = Vec::new();
    for (k, &t) in thresholds.iter().enumerate() {
        left.merge(&bins[k]);
        let right = total.minus(&left);
        if left.n < cfg.min_samples || right.n < cfg.min_samples {
            continue;
        }
        let (sl, sr) = (solve(&left), solve(&right));
        let decrease = floor.parent_loss - (sl.sse + sr.sse) / (n * N_OUTPUTS as f64);
        if !floor.admits(decrease) {
            continue;
        }
        let combined = sl.sse / (left.n * N_OUTPUTS) as f64 + sr.sse / (right.n * N_OUTPUTS) as f64;
        out.push(Candidate {
            feature,
            threshold: t,
            combined,
        });
    }
    out
}

/// Best admissible split of `rows` over `allowed` features.
///
/// Candidates need at least `min_samples` rows per side and must lower the node's
/// squared error by more than `min_loss_decrease` and by more than round-off. Among those the one with the
/// smallest `loss(D_L) + loss(D_R)` wins, ties going to the lower feature index and
/// then the smaller threshold. The winner is refitted exactly before it is returned.
pub fn best_split<R: Rng + ?Sized>(
    data: &Dataset,
    rows: &[usize],
    parent_loss: f64,
    allowed: &[usize],
    cfg: &BuildConfig,
    rng: &mut R,
) -> Result<Option<Split>, LmtError> {
    if rows.len() < 2 * cfg.min_samples {
        return Ok(None);
    }
    // thresholds are drawn sequentially so the parallel scoring below stays reproducible
    let grids: Vec<(usize, Vec<f64>)> = allowed
        .iter()
        .map(|&f| {
            let t = candidate_thresholds(
                rows.iter().map(|&i| data.features[i][f]),
                cfg.n_thresholds,
                cfg.jitter,
                rng,
            );
            (f, t)
        })
        .filter(|(_, t)| !t.is_empty())
        .collect();
    if grids.is_empty() {
        return Ok(None);
    }
    let scaling = Scaling::from_rows(data, rows);
    let floor = Floor::new(data, rows, parent_loss, cfg);
    let mut candidates: Vec<Candidate> = grids
        .par_iter()
        .map(|(f, t)| score_feature(data, rows, &scaling, *f, t, &floor, cfg))
        .flatten()
        .collect();
    candidates.sort_by(|a, b| {
        a.combined
            .total_cmp(&b.combined)
            .then(a.feature.cmp(&b.feature))
            .then(a.threshold.total_cmp(&b.threshold))
    });

    for c in candidates {
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| data.features[i][c.feature] <= c.threshold);
        let (left, right) = rayon::join(
            || fit_leaf(data, &left_rows),
            || fit_leaf(data, &right_rows),
        );
        let split = Split {
            feature: c.feature,
            threshold: c.threshold,
            left_rows,
            right_rows,
            left: left?,
            right: right?,
        };
        if floor.admits(split.loss_decrease(parent_loss)) {
            return Ok(Some(split));
        }
    }
    Ok(None)
}
