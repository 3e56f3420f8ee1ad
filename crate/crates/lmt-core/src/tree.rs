use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::ols::{predict_leaf, Coefficients};
use crate::{BuildConfig, LmtError, CONTACT_FEATURE, N_FEATURES, N_OUTPUTS};

pub const TREE_FORMAT_VERSION: u64 = 1;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchNode {
    pub feature: usize,
    pub threshold: f64,
    pub left: NodeId,
    pub right: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafNode {
    /// Per output: weights on the nine features followed by the intercept.
    pub coefficients: Coefficients,
    pub n_samples: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Branch(BranchNode),
    Leaf(LeafNode),
}

/// Training loss after each accepted split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub n_leaves: usize,
    pub split_node: Option<NodeId>,
    pub feature: Option<usize>,
    pub threshold: Option<f64>,
    /// Mean squared error over all training rows and outputs.
    pub training_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub config: BuildConfig,
    pub dataset_fingerprint: String,
    pub n_rows: usize,
    pub tool_version: String,
    pub history: Vec<GrowthRecord>,
}

/// Structure summary: leaf count, depth of the deepest node, depth of the shallowest leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub n_leaves: usize,
    pub max_depth: usize,
    pub min_leaf_depth: usize,
}

/// A multi-output linear model tree over the nine state features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmTree {
    pub format_version: u64,
    pub feature_names: Vec<String>,
    pub output_names: Vec<String>,
    /// Physical `[min, max]` of each output; predictions are normalized to `[-1, 1]`.
    pub output_ranges: Vec<[f64; 2]>,
    pub root: NodeId,
    pub nodes: Vec<Node>,
    pub metadata: BuildMetadata,
}

impl LmTree {
    /// Id of the leaf that `x` routes to (`x_F <= t` goes left).
    pub fn leaf_id(&self, x: &[f64; N_FEATURES]) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                Node::Branch(b) => {
                    id = if x[b.feature] <= b.threshold {
                        b.left
                    } else {
                        b.right
                    };
                }
                Node::Leaf(_) => return id,
            }
        }
    }

    pub fn leaf(&self, id: NodeId) -> Option<&LeafNode> {
        match self.nodes.get(id) {
            Some(Node::Leaf(l)) => Some(l),
            _ => None,
        }
    }

    /// Root-to-leaf node ids for `x`.
    pub fn path(&self, x: &[f64; N_FEATURES]) -> Vec<NodeId> {
        let mut out = vec![self.root];
        let mut id = self.root;
        while let Node::Branch(b) = &self.nodes[id] {
            id = if x[b.feature] <= b.threshold {
                b.left
            } else {
                b.right
            };
            out.push(id);
        }
        out
    }

    /// Normalized prediction of all outputs.
    pub fn predict(&self, x: &[f64; N_FEATURES]) -> [f64; N_OUTPUTS] {
        match &self.nodes[self.leaf_id(x)] {
            Node::Leaf(l) => predict_leaf(&l.coefficients, x),
            Node::Branch(_) => unreachable!("leaf_id returns a leaf"),
        }
    }

    /// Maps a normalized prediction back to physical units.
    pub fn denormalize(&self, y: &[f64; N_OUTPUTS]) -> [f64; N_OUTPUTS] {
        std::array::from_fn(|a| {
            let [lo, hi] = self.output_ranges[a];
            lo + (y[a] + 1.0) * 0.5 * (hi - lo)
        })
    }

    pub fn leaf_ids(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Leaf(_)))
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn stats(&self) -> TreeStats {
        let mut st = TreeStats {
            n_leaves: 0,
            max_depth: 0,
            min_leaf_depth: usize::MAX,
        };
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            st.max_depth = st.max_depth.max(depth);
            match &self.nodes[id] {
                Node::Branch(b) => {
                    stack.push((b.left, depth + 1));
                    stack.push((b.right, depth + 1));
                }
                Node::Leaf(_) => {
                    st.n_leaves += 1;
                    st.min_leaf_depth = st.min_leaf_depth.min(depth);
                }
            }
        }
        st
    }

    /// Structural checks: every node reachable exactly once from the root, every
    /// branch has two in-range children and never splits on the contact flag.
    pub fn validate(&self) -> Result<(), LmtError> {
        let bad = |m: &str| Err(LmtError::Malformed(m.to_string()));
        if self.format_version != TREE_FORMAT_VERSION {
            return Err(LmtError::Version {
                found: self.format_version,
                expected: TREE_FORMAT_VERSION,
            });
        }
        if self.feature_names.len() != N_FEATURES
            || self.output_names.len() != N_OUTPUTS
            || self.output_ranges.len() != N_OUTPUTS
        {
            return bad("schema dimensions");
        }
        if self.root >= self.nodes.len() {
            return bad("root out of range");
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if id >= self.nodes.len() || seen[id] {
                return bad("node referenced twice or out of range");
            }
            seen[id] = true;
            match &self.nodes[id] {
                Node::Branch(b) => {
                    if b.feature >= N_FEATURES || b.feature == CONTACT_FEATURE {
                        return bad("invalid split feature");
                    }
                    if !b.threshold.is_finite() {
                        return bad("non-finite threshold");
                    }
                    stack.push(b.left);
                    stack.push(b.right);
                }
                Node::Leaf(l) => {
                    if l.coefficients.iter().flatten().any(|w| !w.is_finite()) {
                        return bad("non-finite leaf coefficient");
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("unreachable nodes");
        }
        if self.n_leaves() > self.metadata.config.max_leaves {
            return bad("leaf count exceeds budget");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LmtError> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| LmtError::Malformed(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| LmtError::Malformed("missing format_version".into()))?;
        if version != TREE_FORMAT_VERSION {
            return Err(LmtError::Version {
                found: version,
                expected: TREE_FORMAT_VERSION,
            });
        }
        let tree: LmTree =
            serde_json::from_value(value).map_err(|e| LmtError::Malformed(e.to_string()))?;
        tree.validate()?;
        Ok(tree)
    }

    pub fn save(&self, path: &Path) -> Result<(), LmtError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LmtError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
