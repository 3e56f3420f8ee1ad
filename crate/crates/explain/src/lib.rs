//! Feature attributions from the active leaf of a linear model tree.
//!
//! In a leaf every output is affine in the features, so each feature's share of an
//! output is its term `w_F · x_F` relative to the sum of absolute terms. The raw
//! shares keep their sign (pushing the action up or down); the action-combined
//! importance sums absolute shares over the five outputs, and the compressed view
//! groups those into four operator-facing categories.

use lmt_core::{Coefficients, LmTree, NodeId, N_FEATURES, N_OUTPUTS};
use serde::{Deserialize, Serialize};

/// Signed share of each feature in each output, rows indexed by output.
pub type RawAttribution = [[f64; N_FEATURES]; N_OUTPUTS];

/// Feature indices summed into each compressed category.
pub const DISTANCE_FEATURES: [usize; 2] = [0, 1];
pub const VELOCITY_FEATURES: [usize; 3] = [3, 4, 5];
pub const OBSTACLE_FEATURES: [usize; 2] = [7, 8];
pub const HEADING_FEATURES: [usize; 1] = [2];

/// Importance grouped by what it means to an operator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Compressed {
    pub distance: f64,
    pub velocity: f64,
    pub obstacle: f64,
    pub heading: f64,
}

impl Compressed {
    pub fn total(&self) -> f64 {
        self.distance + self.velocity + self.obstacle + self.heading
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.distance, self.velocity, self.obstacle, self.heading]
    }
}

/// Everything a display needs to explain one decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionFrame {
    pub step: u64,
    pub leaf_id: NodeId,
    pub raw: RawAttribution,
    pub combined: [f64; N_FEATURES],
    pub compressed: Compressed,
    /// Outputs whose leaf function has no feature contribution at this state.
    pub degenerate_outputs: [bool; N_OUTPUTS],
    /// No output can be explained: the leaf acts as a constant here.
    pub degenerate: bool,
}

/// Signed per-output shares `w_{a,F} x_F / Σ_f |w_{a,f} x_f|`, intercept excluded.
///
/// An output whose terms are all zero gets a zero row and is flagged in the second
/// return value.
pub fn attributions(w: &Coefficients, x: &[f64; N_FEATURES]) -> (RawAttribution, [bool; N_OUTPUTS]) {
    let mut raw = [[0.0; N_FEATURES]; N_OUTPUTS];
    let mut zero = [false; N_OUTPUTS];
    for a in 0..N_OUTPUTS {
        let terms: [f64; N_FEATURES] = std::array::from_fn(|f| w[a][f] * x[f]);
        let denom: f64 = terms.iter().map(|t| t.abs()).sum();
        if denom > 0.0 && denom.is_finite() {
            for f in 0..N_FEATURES {
                raw[a][f] = terms[f] / denom;
            }
        } else {
            zero[a] = true;
        }
    }
    (raw, zero)
}

/// Importance of each feature over all outputs: `Σ_a |I_{a,F}|`.
pub fn combine(raw: &RawAttribution) -> [f64; N_FEATURES] {
    std::array::from_fn(|f| raw.iter().map(|row| row[f].abs()).sum())
}

/// Groups combined importance into distance, velocity, obstacle and heading.
pub fn compress(combined: &[f64; N_FEATURES]) -> Compressed {
    let sum = |idx: &[usize]| idx.iter().map(|&f| combined[f]).sum::<f64>();
    Compressed {
        distance: sum(&DISTANCE_FEATURES),
        velocity: sum(&VELOCITY_FEATURES),
        obstacle: sum(&OBSTACLE_FEATURES),
        heading: sum(&HEADING_FEATURES),
    }
}

impl AttributionFrame {
    pub fn from_leaf(w: &Coefficients, x: &[f64; N_FEATURES], leaf_id: NodeId, step: u64) -> Self {
        let (raw, degenerate_outputs) = attributions(w, x);
        let combined = combine(&raw);
        AttributionFrame {
            step,
            leaf_id,
            raw,
            combined,
            compressed: compress(&combined),
            degenerate_outputs,
            degenerate: degenerate_outputs.iter().all(|d| *d),
        }
    }
}

/// Attribution frame for the leaf `x` routes to.
pub fn explain(tree: &LmTree, x: &[f64; N_FEATURES], step: u64) -> AttributionFrame {
    let leaf_id = tree.leaf_id(x);
    let leaf = tree.leaf(leaf_id).expect("routing ends at a leaf");
    AttributionFrame::from_leaf(&leaf.coefficients, x, leaf_id, step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(rows: &[(usize, [f64; N_FEATURES])]) -> Coefficients {
        let mut w = [[0.0; N_FEATURES + 1]; N_OUTPUTS];
        for (a, r) in rows {
            w[*a][..N_FEATURES].copy_from_slice(r);
        }
        w
    }

    #[test]
    fn equal_terms_share_equally() {
        let mut r = [0.0; N_FEATURES];
        r[0] = 1.0;
        r[1] = 1.0;
        let (raw, zero) = attributions(&weights(&[(0, r)]), &r);
        assert_eq!(raw[0][..3], [0.5, 0.5, 0.0]);
        assert!(!zero[0] && zero[1]);
    }

    #[test]
    fn hand_evaluated_signed_shares() {
        let mut w = [0.0; N_FEATURES];
        w[0] = 2.0;
        w[1] = -1.0;
        let mut x = [0.0; N_FEATURES];
        x[0] = 3.0;
        x[1] = 4.0;
        let (raw, _) = attributions(&weights(&[(2, w)]), &x);
        assert!((raw[2][0] - 0.6).abs() < 1e-15);
        assert!((raw[2][1] + 0.4).abs() < 1e-15);
        let c = combine(&raw);
        assert!((c[0] - 0.6).abs() < 1e-15 && (c[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn constant_leaf_is_degenerate() {
        let mut w = [[0.0; N_FEATURES + 1]; N_OUTPUTS];
        for row in w.iter_mut() {
            row[N_FEATURES] = 0.3;
        }
        let f = AttributionFrame::from_leaf(&w, &[1.0; N_FEATURES], 4, 7);
        assert!(f.degenerate);
        assert!(f.raw.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(f.combined, [0.0; N_FEATURES]);
        assert_eq!(f.compressed, Compressed::default());
    }

    #[test]
    fn five_identical_rows_combine_additively() {
        let raw = [[0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]; N_OUTPUTS];
        assert_eq!(combine(&raw)[..2], [2.5, 2.5]);
    }

    #[test]
    fn compression_groups() {
        let mut c = [0.0; N_FEATURES];
        c[0] = 1.0;
        c[1] = 1.0;
        assert_eq!(
            compress(&c),
            Compressed {
                distance: 2.0,
                ..Default::default()
            }
        );
        let mut ones = [1.0; N_FEATURES];
        ones[6] = 0.0;
        assert_eq!(compress(&ones).to_array(), [2.0, 3.0, 2.0, 1.0]);
        assert_eq!(compress(&[0.0; N_FEATURES]).total(), 0.0);
    }
}
