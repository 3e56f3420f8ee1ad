//! Least-squares leaf models.
//!
//! Leaves are fitted from centered sufficient statistics. Regressor columns are
//! standardized per node, the normal equations are factored with a Cholesky
//! decomposition that zeroes out columns whose pivot collapses (constant or
//! collinear within the data), and fewer than `N_FEATURES + 2` rows give an
//! intercept-only model.

use crate::{Dataset, LmtError, N_COEFS, N_FEATURES, N_OUTPUTS, N_REGRESSORS, REGRESSORS};

/// Rows needed before slopes are fitted at all.
pub const MIN_OLS_ROWS: usize = N_FEATURES + 2;

/// A column is dropped when its pivot falls below this fraction of its variance.
const REL_PIVOT_TOL: f64 = 1e-9;
/// Columns with less total variance than this (in standardized units per row) are constant.
const ABS_VAR_TOL: f64 = 1e-12;

/// Coefficients `w[a][f]` for output `a` and feature `f`; `w[a][N_FEATURES]` is the intercept.
pub type Coefficients = [[f64; N_COEFS]; N_OUTPUTS];

#[derive(Debug, Clone, PartialEq)]
pub struct LeafFit {
    pub coefficients: Coefficients,
    pub n_samples: usize,
    /// Mean squared residual over rows and outputs.
    pub loss: f64,
}

impl LeafFit {
    pub fn sse(&self) -> f64 {
        self.loss * (self.n_samples * N_OUTPUTS) as f64
    }
}

/// Per-node affine map onto standardized regressors.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scaling {
    pub center: [f64; N_REGRESSORS],
    pub scale: [f64; N_REGRESSORS],
}

impl Scaling {
    pub fn from_rows(data: &Dataset, rows: &[usize]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut center = [0.0; N_REGRESSORS];
        for &i in rows {
            let x = &data.features[i];
            for (c, &f) in center.iter_mut().zip(REGRESSORS.iter()) {
                *c += x[f];
            }
        }
        center.iter_mut().for_each(|c| *c /= n);
        let mut var = [0.0; N_REGRESSORS];
        for &i in rows {
            let x = &data.features[i];
            for ((s, &f), c) in var.iter_mut().zip(REGRESSORS.iter()).zip(&center) {
                let d = x[f] - c;
                *s += d * d;
            }
        }
        let mut scale = [1.0; N_REGRESSORS];
        for (s, v) in scale.iter_mut().zip(var) {
            let sd = (v / n).sqrt();
            if sd > 0.0 && sd.is_finite() {
                *s = sd;
            }
        }
        Scaling { center, scale }
    }

    #[inline]
    pub fn apply(&self, x: &[f64; N_FEATURES]) -> [f64; N_REGRESSORS] {
        let mut z = [0.0; N_REGRESSORS];
        for (k, &f) in REGRESSORS.iter().enumerate() {
            z[k] = (x[f] - self.center[k]) / self.scale[k];
        }
        z
    }
}

/// Sums needed to solve and score a least-squares fit on a set of rows.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SuffStats {
    pub n: usize,
    pub sz: [f64; N_REGRESSORS],
    /// Upper triangle only (`j <= k`).
    pub szz: [[f64; N_REGRESSORS]; N_REGRESSORS],
    pub sy: [f64; N_OUTPUTS],
    pub szy: [[f64; N_OUTPUTS]; N_REGRESSORS],
    pub syy: f64,
}

impl Default for SuffStats {
    fn default() -> Self {
        SuffStats {
            n: 0,
            sz: [0.0; N_REGRESSORS],
            szz: [[0.0; N_REGRESSORS]; N_REGRESSORS],
            sy: [0.0; N_OUTPUTS],
            szy: [[0.0; N_OUTPUTS]; N_REGRESSORS],
            syy: 0.0,
        }
    }
}

impl SuffStats {
    #[inline]
    pub fn add(&mut self, z: &[f64; N_REGRESSORS], y: &[f64; N_OUTPUTS]) {
        self.n += 1;
        for j in 0..N_REGRESSORS {
            let zj = z[j];
            self.sz[j] += zj;
            for k in j..N_REGRESSORS {
                self.szz[j][k] += zj * z[k];
            }
            for a in 0..N_OUTPUTS {
                self.szy[j][a] += zj * y[a];
            }
        }
        for a in 0..N_OUTPUTS {
            self.sy[a] += y[a];
            self.syy += y[a] * y[a];
        }
    }

    pub fn merge(&mut self, o: &SuffStats) {
        self.n += o.n;
        for j in 0..N_REGRESSORS {
            self.sz[j] += o.sz[j];
            for k in j..N_REGRESSORS {
                self.szz[j][k] += o.szz[j][k];
            }
            for a in 0..N_OUTPUTS {
                self.szy[j][a] += o.szy[j][a];
            }
        }
        for a in 0..N_OUTPUTS {
            self.sy[a] += o.sy[a];
        }
        self.syy += o.syy;
    }

    pub fn minus(&self, o: &SuffStats) -> SuffStats {
        let mut r = *self;
        r.n -= o.n;
        for j in 0..N_REGRESSORS {
            r.sz[j] -= o.sz[j];
            for k in j..N_REGRESSORS {
                r.szz[j][k] -= o.szz[j][k];
            }
            for a in 0..N_OUTPUTS {
                r.szy[j][a] -= o.szy[j][a];
            }
        }
        for a in 0..N_OUTPUTS {
            r.sy[a] -= o.sy[a];
        }
        r.syy -= o.syy;
        r
    }
}

/// Least-squares solution in standardized coordinates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Solution {
    /// Slopes on centered standardized regressors.
    pub beta: [[f64; N_OUTPUTS]; N_REGRESSORS],
    pub z_mean: [f64; N_REGRESSORS],
    pub y_mean: [f64; N_OUTPUTS],
    pub sse: f64,
}

pub(crate) fn solve(s: &SuffStats) -> Solution {
    let n = s.n as f64;
    let mut sol = Solution {
        beta: [[0.0; N_OUTPUTS]; N_REGRESSORS],
        z_mean: [0.0; N_REGRESSORS],
        y_mean: [0.0; N_OUTPUTS],
        sse: 0.0,
    };
    if s.n == 0 {
        return sol;
    }
    for j in 0..N_REGRESSORS {
        sol.z_mean[j] = s.sz[j] / n;
    }
    for a in 0..N_OUTPUTS {
        sol.y_mean[a] = s.sy[a] / n;
    }
    let ss_y = s.syy - s.sy.iter().map(|v| v * v).sum::<f64>() / n;
    if s.n < MIN_OLS_ROWS {
        sol.sse = ss_y.max(0.0);
        return sol;
    }

    let mut czz = [[0.0; N_REGRESSORS]; N_REGRESSORS];
    let mut czy = [[0.0; N_OUTPUTS]; N_REGRESSORS];
    for j in 0..N_REGRESSORS {
        for k in j..N_REGRESSORS {
            let c = s.szz[j][k] - s.sz[j] * s.sz[k] / n;
            czz[j][k] = c;
            czz[k][j] = c;
        }
        for a in 0..N_OUTPUTS {
            czy[j][a] = s.szy[j][a] - s.sz[j] * s.sy[a] / n;
        }
    }

    // Cholesky with column dropping.
    let mut l = [[0.0; N_REGRESSORS]; N_REGRESSORS];
    let mut active = [false; N_REGRESSORS];
    for j in 0..N_REGRESSORS {
        let diag = czz[j][j];
        if !(diag > ABS_VAR_TOL * n) {
            continue;
        }
        let d = diag - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if !(d > REL_PIVOT_TOL * diag) {
            continue;
        }
        active[j] = true;
        let ljj = d.sqrt();
        l[j][j] = ljj;
        for i in (j + 1)..N_REGRESSORS {
            let v = czz[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = v / ljj;
        }
    }
    // rows of dropped columns must not feed later substitutions
    for j in 0..N_REGRESSORS {
        if !active[j] {
            for row in l.iter_mut() {
                row[j] = 0.0;
            }
            l[j] = [0.0; N_REGRESSORS];
        }
    }

    for a in 0..N_OUTPUTS {
        let mut w = [0.0; N_REGRESSORS];
        for j in 0..N_REGRESSORS {
            if active[j] {
                let acc = czy[j][a] - (0..j).map(|k| l[j][k] * w[k]).sum::<f64>();
                w[j] = acc / l[j][j];
            }
        }
        for j in (0..N_REGRESSORS).rev() {
            if active[j] {
                let acc = w[j] - ((j + 1)..N_REGRESSORS).map(|k| l[k][j] * sol.beta[k][a]).sum::<f64>();
                sol.beta[j][a] = acc / l[j][j];
            }
        }
    }
    let explained: f64 = (0..N_REGRESSORS)
        .map(|j| (0..N_OUTPUTS).map(|a| sol.beta[j][a] * czy[j][a]).sum::<f64>())
        .sum();
    sol.sse = (ss_y - explained).max(0.0);
    sol
}

/// Converts a standardized solution to coefficients on the raw features.
pub(crate) fn to_coefficients(sol: &Solution, scaling: &Scaling) -> Coefficients {
    let mut w = [[0.0; N_COEFS]; N_OUTPUTS];
    for a in 0..N_OUTPUTS {
        let mut intercept = sol.y_mean[a];
        for (k, &f) in REGRESSORS.iter().enumerate() {
            let b = sol.beta[k][a];
            w[a][f] = b / scaling.scale[k];
            intercept -= b * (scaling.center[k] / scaling.scale[k] + sol.z_mean[k]);
        }
        w[a][N_FEATURES] = intercept;
    }
    w
}

#[inline]
pub fn predict_leaf(w: &Coefficients, x: &[f64; N_FEATURES]) -> [f64; N_OUTPUTS] {
    let mut out = [0.0; N_OUTPUTS];
    for (o, row) in out.iter_mut().zip(w) {
        *o = row[..N_FEATURES].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[N_FEATURES];
    }
    out
}

/// Mean over rows and outputs of the squared residual.
pub fn leaf_loss(data: &Dataset, rows: &[usize], w: &Coefficients) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let sse: f64 = rows
        .iter()
        .map(|&i| {
            let p = predict_leaf(w, &data.features[i]);
            p.iter()
                .zip(&data.targets[i])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    sse / (rows.len() * N_OUTPUTS) as f64
}

/// Ordinary least squares per output on the given rows.
pub fn fit_leaf(data: &Dataset, rows: &[usize]) -> Result<LeafFit, LmtError> {
    if rows.is_empty() {
        return Err(LmtError::Build("cannot fit a leaf on zero rows".into()));
    }
    let scaling = Scaling::from_rows(data, rows);
    let mut stats = SuffStats::default();
    for &i in rows {
        stats.add(&scaling.apply(&data.features[i]), &data.targets[i]);
    }
    let coefficients = to_coefficients(&solve(&stats), &scaling);
    Ok(LeafFit {
        coefficients,
        n_samples: rows.len(),
        loss: leaf_loss(data, rows, &coefficients),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(d: &Dataset) -> Vec<usize> {
        (0..d.len()).collect()
    }

    #[test]
    fn recovers_single_slope_with_constant_columns() {
        let mut d = Dataset::new();
        for i in 0..50 {
            let x0 = f64::from(i) * 0.1 - 2.0;
            let mut x = [0.0; N_FEATURES];
            x[0] = x0;
            let y = (2.0 * x0 + 1.0) / 10.0;
            d.push(x, [y; N_OUTPUTS]);
        }
        let fit = fit_leaf(&d, &all(&d)).unwrap();
        for a in 0..N_OUTPUTS {
            assert!((fit.coefficients[a][0] - 0.2).abs() < 1e-9);
            assert!((fit.coefficients[a][N_FEATURES] - 0.1).abs() < 1e-9);
            for f in 1..N_FEATURES {
                assert_eq!(fit.coefficients[a][f], 0.0);
            }
        }
        assert!(fit.loss < 1e-20);
    }

    #[test]
    fn constant_targets_give_mean_solution() {
        let mut d = Dataset::new();
        for i in 0..30 {
            let x: [f64; N_FEATURES] = std::array::from_fn(|f| ((i * 7 + f * 3) % 11) as f64);
            d.push(x, [0.25, -0.5, 0.0, 0.75, 1.0]);
        }
        let fit = fit_leaf(&d, &all(&d)).unwrap();
        let expected = [0.25, -0.5, 0.0, 0.75, 1.0];
        for a in 0..N_OUTPUTS {
            for f in 0..N_FEATURES {
                assert!(fit.coefficients[a][f].abs() < 1e-12);
            }
            assert!((fit.coefficients[a][N_FEATURES] - expected[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_rows_fall_back_to_intercept() {
        let mut d = Dataset::new();
        d.push([1.0; N_FEATURES], [0.1; N_OUTPUTS]);
        d.push([2.0; N_FEATURES], [0.3; N_OUTPUTS]);
        d.push([-1.0; N_FEATURES], [0.5; N_OUTPUTS]);
        let fit = fit_leaf(&d, &all(&d)).unwrap();
        for a in 0..N_OUTPUTS {
            assert!((fit.coefficients[a][N_FEATURES] - 0.3).abs() < 1e-12);
            assert!(fit.coefficients[a][..N_FEATURES].iter().all(|w| *w == 0.0));
        }
    }

    #[test]
    fn empty_rows_are_an_error() {
        assert!(fit_leaf(&Dataset::new(), &[]).is_err());
    }

    #[test]
    fn half_plus_half_minus_against_zero() {
        let mut d = Dataset::new();
        for i in 0..10 {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            d.push([0.0; N_FEATURES], [y; N_OUTPUTS]);
        }
        let zero = [[0.0; N_COEFS]; N_OUTPUTS];
        assert_eq!(leaf_loss(&d, &all(&d), &zero), 1.0);
    }

    #[test]
    fn contact_flag_never_gets_weight() {
        let mut d = Dataset::new();
        for i in 0..40 {
            let mut x = [0.0; N_FEATURES];
            x[0] = f64::from(i);
            x[6] = f64::from(i % 2);
            d.push(x, [0.1 * x[6]; N_OUTPUTS]);
        }
        let fit = fit_leaf(&d, &all(&d)).unwrap();
        for a in 0..N_OUTPUTS {
            assert_eq!(fit.coefficients[a][6], 0.0);
        }
    }
}
