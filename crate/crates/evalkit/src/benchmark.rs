//! Wall-clock build timings for plain and ordered split search.

use lmt_core::{grow, BuildConfig, Dataset};
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::fidelity::median;
use crate::EvalError;

/// One configuration to time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCase {
    pub label: String,
    pub config: BuildConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub label: String,
    /// `"ofs"` or `"plain"`.
    pub mode: String,
    pub max_leaves: usize,
    pub n_leaves: usize,
    pub n_rows: usize,
    pub repeats: usize,
    pub times_s: Vec<f64>,
    pub median_s: f64,
}

/// Timing table as written to `timings.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub tool_version: String,
    pub dataset_fingerprint: String,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    /// `median(a) / median(b)` for the rows labelled `a` and `b`.
    pub fn ratio(&self, a: &str, b: &str) -> Option<f64> {
        let m = |l: &str| self.rows.iter().find(|r| r.label == l).map(|r| r.median_s);
        Some(m(a)? / m(b)?)
    }
}

/// Plain and ordered builds at each leaf budget, labelled `plain-<n>` and `ofs-<n>`.
pub fn plain_vs_ofs(leaves: &[usize], base: &BuildConfig) -> Vec<BenchCase> {
    leaves
        .iter()
        .flat_map(|&n| {
            let ofs = BuildConfig {
                max_leaves: n,
                ..base.clone()
            };
            let plain = BuildConfig {
                ordered_groups: Vec::new(),
                ..ofs.clone()
            };
            [
                BenchCase {
                    label: format!("plain-{n}"),
                    config: plain,
                },
                BenchCase {
                    label: format!("ofs-{n}"),
                    config: ofs,
                },
            ]
        })
        .collect()
}

/// Builds every case `repeats` times, after one untimed warm-up build, and reports
/// the median. The cases are interleaved per repeat so slow drifts in machine load
/// affect all of them alike.
pub fn build_benchmark(data: &Dataset, cases: &[BenchCase], repeats: usize) -> Result<TimingTable, EvalError> {
    if repeats == 0 {
        return Err(EvalError::Config("at least one repeat is required".into()));
    }
    for c in cases {
        c.config.validate()?;
    }
    let mut n_leaves = Vec::with_capacity(cases.len());
    for c in cases {
        n_leaves.push(grow(data, &c.config)?.n_leaves());
    }
    let mut times = vec![Vec::with_capacity(repeats); cases.len()];
    for _ in 0..repeats {
        for (c, t) in cases.iter().zip(times.iter_mut()) {
            let t0 = Instant::now();
            let tree = grow(data, &c.config)?;
            t.push(t0.elapsed().as_secs_f64());
            drop(tree);
        }
    }
    let rows = cases
        .iter()
        .zip(times)
        .zip(n_leaves)
        .map(|((c, times_s), n_leaves)| {
            let median_s = median(&mut times_s.clone()).expect("repeats >= 1");
            TimingRow {
                label: c.label.clone(),
                mode: if c.config.is_ordered() { "ofs" } else { "plain" }.to_string(),
                max_leaves: c.config.max_leaves,
                n_leaves,
                n_rows: data.len(),
                repeats,
                times_s,
                median_s,
            }
        })
        .collect();
    Ok(TimingTable {
        tool_version: crate::io::TOOL_VERSION.to_string(),
        dataset_fingerprint: data.fingerprint(),
        rows,
    })
}
