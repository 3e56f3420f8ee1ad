//! Feed-forward network inference.
//!
//! Weights file layout (all integers and floats little-endian):
//!
//! ```text
//! magic     8 bytes   "MLPWGT\0\x01"
//! hdr_len   u64
//! header    hdr_len bytes of UTF-8 JSON (shapes, activations, standardization)
//! payload   f64 array: for each layer, weights row-major (outputs x inputs), then bias
//! ```

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use harbor_env::{StateVector, N_ACTIONS, N_FEATURES};

use crate::{check_finite, denormalize, Action, NormalizedAction, Policy, PolicyError};

const MAGIC: &[u8; 8] = b"MLPWGT\0\x01";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], act: Activation, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            act.apply(z)
        }));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub layers: Vec<DenseLayer>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    layers: Vec<LayerShape>,
    hidden_activation: Activation,
    output_activation: Activation,
    input_mean: Vec<f64>,
    input_scale: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
}

impl MlpWeights {
    /// All-zero network with the given layer widths, e.g. `[9, 400, 400, 5]`.
    pub fn zeros(widths: &[usize]) -> Self {
        let layers = widths.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect();
        let n_in = widths.first().copied().unwrap_or(0);
        MlpWeights {
            layers,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Tanh,
            input_mean: vec![0.0; n_in],
            input_scale: vec![1.0; n_in],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Checks that layer shapes chain and standardization constants are usable.
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.layers.is_empty() {
            return Err(PolicyError::Shape("no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(PolicyError::Shape(format!("layer {i} buffer sizes")));
            }
            if l.inputs == 0 || l.outputs == 0 {
                return Err(PolicyError::Shape(format!("layer {i} has a zero dimension")));
            }
        }
        for (i, w) in self.layers.windows(2).enumerate() {
            if w[0].outputs != w[1].inputs {
                return Err(PolicyError::Shape(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].outputs,
                    i + 1,
                    w[1].inputs
                )));
            }
        }
        let n_in = self.input_dim();
        if self.input_mean.len() != n_in || self.input_scale.len() != n_in {
            return Err(PolicyError::Shape("standardization length".into()));
        }
        if self.input_scale.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || self.input_mean.iter().any(|m| !m.is_finite())
        {
            return Err(PolicyError::Shape("standardization constants".into()));
        }
        Ok(())
    }

    /// Additionally requires the 9-feature in / 5-action out contract.
    pub fn validate_for_policy(&self) -> Result<(), PolicyError> {
        self.validate()?;
        if self.input_dim() != N_FEATURES || self.output_dim() != N_ACTIONS {
            return Err(PolicyError::Shape(format!(
                "expected {N_FEATURES} -> {N_ACTIONS}, got {} -> {}",
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Standardize, hidden layers with the hidden activation, last layer with the output one.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut cur: Vec<f64> = input
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let act = if i == last {
                self.output_activation
            } else {
                self.hidden_activation
            };
            layer.forward(&cur, act, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), PolicyError> {
        self.validate()?;
        let header = Header {
            version: FORMAT_VERSION,
            layers: self
                .layers
                .iter()
                .map(|l| LayerShape {
                    inputs: l.inputs,
                    outputs: l.outputs,
                })
                .collect(),
            hidden_activation: self.hidden_activation,
            output_activation: self.output_activation,
            input_mean: self.input_mean.clone(),
            input_scale: self.input_scale.clone(),
        };
        let hdr = serde_json::to_vec(&header).map_err(|e| PolicyError::Format(e.to_string()))?;
        w.write_all(MAGIC)?;
        w.write_all(&(hdr.len() as u64).to_le_bytes())?;
        w.write_all(&hdr)?;
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.bias) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, PolicyError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| PolicyError::Format("truncated magic".into()))?;
        if &magic != MAGIC {
            return Err(PolicyError::Format("bad magic".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)
            .map_err(|_| PolicyError::Format("truncated header length".into()))?;
        let len = usize::try_from(u64::from_le_bytes(len))
            .map_err(|_| PolicyError::Format("header length overflow".into()))?;
        if len > 1 << 24 {
            return Err(PolicyError::Format("header too large".into()));
        }
        let mut hdr = vec![0u8; len];
        r.read_exact(&mut hdr)
            .map_err(|_| PolicyError::Format("truncated header".into()))?;
        let header: Header =
            serde_json::from_slice(&hdr).map_err(|e| PolicyError::Format(e.to_string()))?;
        if header.version != FORMAT_VERSION {
            return Err(PolicyError::Format(format!(
                "unsupported weights version {}",
                header.version
            )));
        }
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        let expected: usize = header
            .layers
            .iter()
            .map(|l| l.outputs * (l.inputs + 1))
            .sum::<usize>()
            * 8;
        if payload.len() != expected {
            return Err(PolicyError::Format(format!(
                "payload has {} bytes, expected {expected}",
                payload.len()
            )));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let layers = header
            .layers
            .iter()
            .map(|s| DenseLayer {
                inputs: s.inputs,
                outputs: s.outputs,
                weights: values.by_ref().take(s.inputs * s.outputs).collect(),
                bias: values.by_ref().take(s.outputs).collect(),
            })
            .collect();
        let w = MlpWeights {
            layers,
            hidden_activation: header.hidden_activation,
            output_activation: header.output_activation,
            input_mean: header.input_mean,
            input_scale: header.input_scale,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Network forward pass on a state vector; outputs lie in `(-1, 1)` for a tanh head.
pub fn mlp_forward(w: &MlpWeights, x: &StateVector) -> NormalizedAction {
    let out = w.forward(&x.to_array());
    let mut a = [0.0; N_ACTIONS];
    a.copy_from_slice(&out[..N_ACTIONS]);
    NormalizedAction(a)
}

/// Policy backed by network weights.
#[derive(Debug, Clone)]
pub struct MlpPolicy {
    weights: MlpWeights,
}

impl MlpPolicy {
    pub fn new(weights: MlpWeights) -> Result<Self, PolicyError> {
        weights.validate_for_policy()?;
        Ok(MlpPolicy { weights })
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        Self::new(MlpWeights::load(path)?)
    }

    pub fn weights(&self) -> &MlpWeights {
        &self.weights
    }
}

impl Policy for MlpPolicy {
    fn name(&self) -> &str {
        "mlp"
    }

    fn predict(&self, x: &StateVector) -> Result<Action, PolicyError> {
        check_finite(x)?;
        Ok(denormalize(&mlp_forward(&self.weights, x)).clamp())
    }
}
