use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::{LmtError, FEATURE_NAMES, N_FEATURES, N_OUTPUTS, OUTPUT_NAMES};

pub type Features = [f64; N_FEATURES];
pub type Targets = [f64; N_OUTPUTS];

/// Feature rows paired with normalized black-box actions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub features: Vec<Features>,
    pub targets: Vec<Targets>,
}

/// Per-feature mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Dataset {
            features: Vec::with_capacity(n),
            targets: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn push(&mut self, x: Features, y: Targets) {
        self.features.push(x);
        self.targets.push(y);
    }

    pub fn extend(&mut self, other: &Dataset) {
        self.features.extend_from_slice(&other.features);
        self.targets.extend_from_slice(&other.targets);
    }

    pub fn validate(&self) -> Result<(), LmtError> {
        if self.features.len() != self.targets.len() {
            return Err(LmtError::Dataset("feature/target row counts differ".into()));
        }
        for (i, (x, y)) in self.features.iter().zip(&self.targets).enumerate() {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(LmtError::Dataset(format!("row {i}: non-finite feature")));
            }
            if y.iter().any(|v| !(v.is_finite() && (-1.0..=1.0).contains(v))) {
                return Err(LmtError::Dataset(format!("row {i}: target outside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// SHA-256 over the little-endian bytes of every value, row by row.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (x, y) in self.features.iter().zip(&self.targets) {
            for v in x.iter().chain(y) {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn feature_stats(&self) -> FeatureStats {
        let n = self.len().max(1) as f64;
        let mut mean = vec![0.0; N_FEATURES];
        for x in &self.features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; N_FEATURES];
        for x in &self.features {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        FeatureStats {
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            mean,
            std: var.iter().map(|s| (s / n).sqrt()).collect(),
        }
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: rows.iter().map(|&i| self.features[i]).collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), LmtError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(FEATURE_NAMES.iter().chain(OUTPUT_NAMES.iter()))?;
        let mut rec = Vec::with_capacity(N_FEATURES + N_OUTPUTS);
        for (x, y) in self.features.iter().zip(&self.targets) {
            rec.clear();
            rec.extend(x.iter().chain(y).map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Dataset, LmtError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let expected: Vec<&str> = FEATURE_NAMES.iter().chain(OUTPUT_NAMES.iter()).copied().collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(LmtError::Dataset(format!(
                "unexpected header {:?}, expected {:?}",
                header, expected
            )));
        }
        let mut ds = Dataset::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut vals = [0.0; N_FEATURES + N_OUTPUTS];
            for (slot, field) in vals.iter_mut().zip(rec.iter()) {
                *slot = field
                    .parse()
                    .map_err(|e| LmtError::Dataset(format!("row {}: {e}", i + 1)))?;
            }
            let mut x = [0.0; N_FEATURES];
            let mut y = [0.0; N_OUTPUTS];
            x.copy_from_slice(&vals[..N_FEATURES]);
            y.copy_from_slice(&vals[N_FEATURES..]);
            ds.push(x, y);
        }
        ds.validate()?;
        Ok(ds)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), LmtError> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<Dataset, LmtError> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}
