use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ForestModel, ForestParams, Node, Tree};
use crate::error::{Error, Result};
use crate::features::{LabeledSample, FEATURE_COUNT};

/// Column-major training matrix.
struct Columns {
    values: Vec<Vec<f64>>,
    vessel: Vec<bool>,
}

impl Columns {
    fn new(samples: &[LabeledSample]) -> Self {
        let values = (0..FEATURE_COUNT)
            .map(|f| samples.iter().map(|s| s.vector[f]).collect())
            .collect();
        Self {
            values,
            vessel: samples.iter().map(|s| s.vessel).collect(),
        }
    }

    fn len(&self) -> usize {
        self.vessel.len()
    }
}

/// Split quality `(v_l^2 + b_l^2) / n_l + (v_r^2 + b_r^2) / n_r` as an exact
/// fraction. Larger means lower weighted Gini impurity.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn node(v: u64, b: u64) -> Self {
        let n = (v + b) as u128;
        Self {
            num: (v as u128).pow(2) + (b as u128).pow(2),
            den: n.max(1),
        }
    }

    fn split(vl: u64, bl: u64, vr: u64, br: u64) -> Self {
        let (nl, nr) = ((vl + bl) as u128, (vr + br) as u128);
        let al = (vl as u128).pow(2) + (bl as u128).pow(2);
        let ar = (vr as u128).pow(2) + (br as u128).pow(2);
        Self {
            num: al * nr + ar * nl,
            den: nl * nr,
        }
    }

    fn gt(&self, other: &Self) -> bool {
        self.num * other.den > other.num * self.den
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    purity: Purity,
}

impl Candidate {
    /// Higher purity wins; ties go to the lower feature index, then the lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        if self.purity.gt(&other.purity) {
            return true;
        }
        if other.purity.gt(&self.purity) {
            return false;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

struct Task {
    indices: Vec<u32>,
    depth: usize,
    /// Parent node and whether this is its right child.
    parent: Option<(usize, bool)>,
}

struct TreeBuilder<'a> {
    data: &'a Columns,
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    pairs: Vec<(f64, bool)>,
}

impl TreeBuilder<'_> {
    fn counts(&self, indices: &[u32]) -> (u64, u64) {
        let v = indices.iter().filter(|&&i| self.data.vessel[i as usize]).count() as u64;
        (v, indices.len() as u64 - v)
    }

    /// Best threshold on one feature, or `None` when the feature is constant
    /// in the node. The bool reports whether the feature was non-constant.
    fn best_on_feature(&mut self, indices: &[u32], feature: usize) -> (bool, Option<Candidate>) {
        let col = &self.data.values[feature];
        self.pairs.clear();
        self.pairs
            .extend(indices.iter().map(|&i| (col[i as usize], self.data.vessel[i as usize])));
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let first = self.pairs[0].0;
        let last = self.pairs[self.pairs.len() - 1].0;
        if first == last {
            return (false, None);
        }

        let n = self.pairs.len();
        let total_v = self.pairs.iter().filter(|p| p.1).count() as u64;
        let total_b = n as u64 - total_v;
        let min_leaf = self.params.min_samples_leaf;
        let (mut vl, mut bl) = (0u64, 0u64);
        let mut best: Option<Candidate> = None;
        for k in 0..n - 1 {
            if self.pairs[k].1 {
                vl += 1;
            } else {
                bl += 1;
            }
            let (a, b) = (self.pairs[k].0, self.pairs[k + 1].0);
            if a == b || k + 1 < min_leaf || n - k - 1 < min_leaf {
                continue;
            }
            let cand = Candidate {
                feature,
                threshold: midpoint(a, b),
                purity: Purity::split(vl, bl, total_v - vl, total_b - bl),
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        (true, best)
    }

    /// Features are visited in a seeded random order until `mtry` of them have
    /// been found non-constant in the node.
    fn best_split(&mut self, indices: &[u32]) -> Option<Candidate> {
        let mut order: Vec<usize> = (0..FEATURE_COUNT).collect();
        let mut examined = 0;
        let mut best: Option<Candidate> = None;
        for k in 0..FEATURE_COUNT {
            if examined == self.params.mtry {
                break;
            }
            let j = self.rng.gen_range(k..FEATURE_COUNT);
            order.swap(k, j);
            let (varies, cand) = self.best_on_feature(indices, order[k]);
            if varies {
                examined += 1;
            }
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.beats(b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn build(mut self, root: Vec<u32>) -> Tree {
        let mut nodes: Vec<Node> = Vec::new();
        let mut stack = vec![Task {
            indices: root,
            depth: 0,
            parent: None,
        }];
        while let Some(task) = stack.pop() {
            let id = nodes.len();
            if let Some((parent, is_right)) = task.parent {
                if let Node::Split { left, right, .. } = &mut nodes[parent] {
                    if is_right {
                        *right = id as u32;
                    } else {
                        *left = id as u32;
                    }
                }
            }
            let (v, b) = self.counts(&task.indices);
            let can_split = v > 0
                && b > 0
                && task.indices.len() >= 2 * self.params.min_samples_leaf
                && self.params.max_depth.is_none_or(|d| task.depth < d);
            let split = if can_split {
                self.best_split(&task.indices)
                    .filter(|c| c.purity.gt(&Purity::node(v, b)))
            } else {
                None
            };
            let Some(split) = split else {
                nodes.push(Node::Leaf {
                    vessel: v,
                    background: b,
                });
                continue;
            };
            let col = &self.data.values[split.feature];
            let (left, right): (Vec<u32>, Vec<u32>) = task
                .indices
                .iter()
                .partition(|&&i| col[i as usize] <= split.threshold);
            debug_assert!(!left.is_empty() && !right.is_empty());
            nodes.push(Node::Split {
                feature: split.feature as u32,
                threshold: split.threshold,
                left: 0,
                right: 0,
            });
            // right pushed first so the left subtree is emitted next (preorder)
            stack.push(Task {
                indices: right,
                depth: task.depth + 1,
                parent: Some((id, true)),
            });
            stack.push(Task {
                indices: left,
                depth: task.depth + 1,
                parent: Some((id, false)),
            });
        }
        Tree::from_nodes(nodes).expect("builder emits well-formed preorder trees")
    }
}

fn grow_tree(data: &Columns, params: &ForestParams, tree_index: usize) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(tree_index as u64));
    let n = data.len();
    let bootstrap: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
    TreeBuilder {
        data,
        params,
        rng,
        pairs: Vec::with_capacity(n),
    }
    .build(bootstrap)
}

/// Fits a forest: each tree sees a bootstrap resample of `samples` and is
/// grown with Gini splits. Tree `t` draws from an RNG seeded with
/// `seed + t`, so the result does not depend on thread scheduling.
pub fn train(samples: &[LabeledSample], params: &ForestParams) -> Result<ForestModel> {
    params.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let data = Columns::new(samples);
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(&data, params, t))
        .collect();
    ForestModel::from_trees(*params, trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::write_model;

    /// Label is the sign of feature 0 (|x| >= 0.25); feature 1 carries the
    /// same sign. With `noise`, the other features are uniform noise,
    /// otherwise zero.
    fn separable(n: usize, seed: u64, noise: bool) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let vessel = i % 2 == 0;
                let mut vector = [0.0; FEATURE_COUNT];
                if noise {
                    vector = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                }
                let sign = if vessel { 1.0 } else { -1.0 };
                vector[0] = sign * rng.gen_range(0.25..2.0);
                vector[1] = sign * rng.gen_range(0.25..1.0);
                LabeledSample { vector, vessel }
            })
            .collect()
    }

    #[test]
    fn purity_ordering_matches_gini() {
        // a perfect split beats a useless one
        let perfect = Purity::split(5, 0, 0, 5);
        let useless = Purity::split(2, 2, 3, 3);
        assert!(perfect.gt(&useless));
        assert!(!useless.gt(&Purity::node(5, 5)));
        assert!(perfect.gt(&Purity::node(5, 5)));
    }

    #[test]
    fn single_class_gives_pure_leaves() {
        let mut s = separable(40, 1, true);
        for x in &mut s {
            x.vessel = true;
        }
        let m = train(&s, &ForestParams { n_trees: 5, ..Default::default() }).unwrap();
        for t in m.trees() {
            assert_eq!(t.nodes().len(), 1);
        }
        assert_eq!(m.proba(&[0.3; FEATURE_COUNT]), 1.0);
    }

    fn training_accuracy(m: &ForestModel, s: &[LabeledSample]) -> f64 {
        let correct = s.iter().filter(|x| (m.proba(&x.vector) > 0.5) == x.vessel).count();
        correct as f64 / s.len() as f64
    }

    #[test]
    fn separable_set_is_fit_exactly() {
        let s = separable(200, 7, false);
        let params = ForestParams {
            n_trees: 10,
            seed: 3,
            ..Default::default()
        };
        let m = train(&s, &params).unwrap();
        assert_eq!(training_accuracy(&m, &s), 1.0);
        // every root split falls in the margin
        for t in m.trees() {
            match t.nodes()[0] {
                Node::Split { feature, threshold, .. } => {
                    assert!(feature <= 1 && threshold.abs() < 0.25);
                }
                Node::Leaf { .. } => panic!("root should split"),
            }
        }
    }

    #[test]
    fn noisy_separable_set_is_mostly_fit() {
        let s = separable(200, 7, true);
        let m = train(&s, &ForestParams { n_trees: 25, seed: 3, ..Default::default() }).unwrap();
        assert!(training_accuracy(&m, &s) >= 0.95);
    }

    #[test]
    fn depth_and_leaf_limits() {
        let s = separable(200, 8, true);
        let stump = train(
            &s,
            &ForestParams {
                n_trees: 3,
                max_depth: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(stump.trees().iter().all(|t| t.depth() <= 1));

        let coarse = train(
            &s,
            &ForestParams {
                n_trees: 3,
                min_samples_leaf: 30,
                ..Default::default()
            },
        )
        .unwrap();
        for t in coarse.trees() {
            for n in t.nodes() {
                if let Node::Leaf { vessel, background } = n {
                    assert!(vessel + background >= 30);
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let s = separable(150, 9, true);
        let params = ForestParams {
            n_trees: 8,
            seed: 42,
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        write_model(&train(&s, &params).unwrap(), &a).unwrap();
        write_model(&train(&s, &params).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(
            train(&[], &ForestParams::default()),
            Err(Error::EmptyTrainingSet)
        ));
    }
}
