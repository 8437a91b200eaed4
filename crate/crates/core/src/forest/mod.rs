//! Random forest of binary CART trees with class-count leaves.

mod importance;
mod io;
mod train;

pub use importance::{default_groups, permutation_importance, FeatureGroup, GroupImportance};
pub use io::{load_model, read_model, save_model, write_model};
pub use train::train;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features examined per split.
    pub mtry: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: 6,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("forest needs at least one tree".into()));
        }
        if self.mtry == 0 || self.mtry > FEATURE_COUNT {
            return Err(Error::InvalidConfig(format!(
                "mtry {} not in 1..={FEATURE_COUNT}",
                self.mtry
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("min_samples_leaf must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Samples with `vector[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf { vessel: u64, background: u64 },
}

/// Tree stored in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Checks that child links point forward, every node is reachable exactly
    /// once and features are in range.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::CorruptModel("tree without nodes".into()));
        }
        let n = nodes.len();
        let mut parents = vec![0u32; n];
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature as usize >= FEATURE_COUNT {
                        return Err(Error::CorruptModel(format!("feature index {feature}")));
                    }
                    if threshold.is_nan() {
                        return Err(Error::CorruptModel("NaN threshold".into()));
                    }
                    for child in [left, right] {
                        let c = child as usize;
                        if c <= i || c >= n {
                            return Err(Error::CorruptModel(format!(
                                "node {i} links to {child} of {n}"
                            )));
                        }
                        parents[c] += 1;
                    }
                }
                Node::Leaf { vessel, background } => {
                    if vessel + background == 0 {
                        return Err(Error::CorruptModel(format!("empty leaf at node {i}")));
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(Error::CorruptModel("dangling or shared node".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// The leaf reached by `v`.
    pub fn leaf(&self, v: &[f64]) -> (u64, u64) {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if v[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
                Node::Leaf { vessel, background } => return (vessel, background),
            }
        }
    }

    pub fn proba(&self, v: &[f64]) -> f64 {
        let (vessel, background) = self.leaf(v);
        vessel as f64 / (vessel + background) as f64
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => {
                    1 + go(nodes, left as usize).max(go(nodes, right as usize))
                }
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    params: ForestParams,
    trees: Vec<Tree>,
}

impl ForestModel {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn from_trees(params: ForestParams, trees: Vec<Tree>) -> Result<Self> {
        params.validate()?;
        if trees.len() != params.n_trees {
            return Err(Error::CorruptModel(format!(
                "{} trees, parameters say {}",
                trees.len(),
                params.n_trees
            )));
        }
        Ok(Self { params, trees })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn feature_count(&self) -> usize {
        FEATURE_COUNT
    }

    /// Mean over trees of the vessel fraction of the reached leaf.
    #[inline]
    pub fn proba(&self, v: &FeatureVector) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.proba(v)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict_proba(&self, v: &[f64]) -> Result<f64> {
        let v: &FeatureVector = v.try_into().map_err(|_| Error::BadVectorLength {
            expected: FEATURE_COUNT,
            found: v.len(),
        })?;
        Ok(self.proba(v))
    }

    /// Vessel iff the probability is strictly above `threshold`.
    pub fn predict(&self, v: &[f64], threshold: f64) -> Result<bool> {
        Ok(self.predict_proba(v)? > threshold)
    }
}
