//! Binary decision trees shared by the forest and boosting learners.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A tree node. Samples with `x[feature] <= threshold` go left.
///
/// `cover` is the training weight reaching the node (bootstrap multiplicity
/// for forests); `gain` is the weighted impurity decrease of the split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        cover: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        cover: f64,
        gain: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Leaf { cover, .. } | Node::Split { cover, .. } => *cover,
        }
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Cover-weighted mean of the leaf values.
    pub fn expected_value(&self) -> f64 {
        match self {
            Node::Leaf { value, .. } => *value,
            Node::Split { left, right, .. } => {
                let (lc, rc) = (left.cover(), right.cover());
                (lc * left.expected_value() + rc * right.expected_value()) / (lc + rc)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Adds each split's gain to `acc[feature]`.
    pub fn accumulate_gain(&self, acc: &mut [f64]) {
        if let Node::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            acc[*feature] += gain;
            left.accumulate_gain(acc);
            right.accumulate_gain(acc);
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            Node::Leaf { .. } => None,
            Node::Split {
                feature,
                left,
                right,
                ..
            } => Some(
                (*feature)
                    .max(left.max_feature_index().unwrap_or(0))
                    .max(right.max_feature_index().unwrap_or(0)),
            ),
        }
    }
}

/// How per-tree outputs combine into the ensemble output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Combine {
    /// Mean of tree outputs (random forest, probability space).
    Average,
    /// `init + Σ tree outputs` (boosting, logit space).
    Additive { init: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Node>,
    pub combine: Combine,
    pub n_features: usize,
}

impl TreeEnsemble {
    /// Ensemble output: vote fraction for `Average`, margin for `Additive`.
    pub fn output(&self, x: ArrayView1<'_, f64>) -> f64 {
        match self.combine {
            Combine::Average => {
                if self.trees.is_empty() {
                    return 0.0;
                }
                self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
            }
            Combine::Additive { init } => init + self.trees.iter().map(|t| t.predict(x)).sum::<f64>(),
        }
    }

    /// Output expected over the training background (node covers).
    pub fn expected_output(&self) -> f64 {
        match self.combine {
            Combine::Average => {
                if self.trees.is_empty() {
                    return 0.0;
                }
                self.trees.iter().map(Node::expected_value).sum::<f64>() / self.trees.len() as f64
            }
            Combine::Additive { init } => {
                init + self.trees.iter().map(Node::expected_value).sum::<f64>()
            }
        }
    }

    /// Per-feature gain normalised by each tree's root cover, then to sum 1.
    pub fn gain_importance(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        for t in &self.trees {
            let mut per_tree = vec![0.0; self.n_features];
            t.accumulate_gain(&mut per_tree);
            let root = t.cover();
            for (a, g) in acc.iter_mut().zip(per_tree) {
                *a += g / root;
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }
}

pub(crate) struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Scans every midpoint between consecutive distinct values of `feature`
/// over the rows `idx` and returns the split maximizing `score_gain`.
/// `score_gain` receives the sorted row order and the left-partition size.
fn best_split_on_feature<F>(
    x: &Array2<f64>,
    idx: &[usize],
    feature: usize,
    min_leaf: usize,
    mut score_gain: F,
) -> Option<(f64, f64, usize, Vec<usize>)>
where
    F: FnMut(&[usize], usize) -> f64,
{
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]).then(a.cmp(&b)));
    let n = order.len();
    let mut best: Option<(f64, f64, usize)> = None;
    for split in min_leaf.max(1)..=n.saturating_sub(min_leaf.max(1)) {
        let lo = x[[order[split - 1], feature]];
        let hi = x[[order[split], feature]];
        if lo >= hi {
            continue;
        }
        let gain = score_gain(&order, split);
        if best.is_none_or(|(g, _, _)| gain > g) {
            let mut threshold = 0.5 * (lo + hi);
            if threshold >= hi {
                threshold = lo;
            }
            best = Some((gain, threshold, split));
        }
    }
    best.map(|(g, t, s)| (g, t, s, order))
}

fn gini(n1: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let p = n1 / n;
    2.0 * p * (1.0 - p)
}

pub(crate) struct GiniParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: usize,
}

/// Grows a classification tree on `idx` (rows may repeat) with Gini splits.
/// Leaves hold the majority vote as 0.0 / 1.0, ties voting 0.
pub(crate) fn grow_gini<R: Rng>(
    x: &Array2<f64>,
    y: &[f64],
    idx: Vec<usize>,
    depth: usize,
    params: &GiniParams,
    rng: &mut R,
) -> Node {
    let n = idx.len() as f64;
    let n1: f64 = idx.iter().map(|&i| y[i]).sum();
    let leaf = Node::Leaf {
        value: if n1 > n - n1 { 1.0 } else { 0.0 },
        cover: n,
    };
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if n1 == 0.0 || n1 == n || idx.len() < 2 * params.min_samples_leaf.max(1) || depth_capped {
        return leaf;
    }
    let parent_impurity = n * gini(n1, n);
    let mut features: Vec<usize> = (0..x.ncols()).collect();
    features.shuffle(rng);
    let mut visited = 0;
    let mut best: Option<SplitCandidate> = None;
    for &f in &features {
        if visited >= params.max_features {
            break;
        }
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(x[[i, f]]), hi.max(x[[i, f]]))
        });
        if lo >= hi {
            continue;
        }
        visited += 1;
        let found = best_split_on_feature(x, &idx, f, params.min_samples_leaf, |order, split| {
            let l1: f64 = order[..split].iter().map(|&i| y[i]).sum();
            let nl = split as f64;
            let nr = n - nl;
            parent_impurity - nl * gini(l1, nl) - nr * gini(n1 - l1, nr)
        });
        if let Some((gain, threshold, split, order)) = found {
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold,
                    gain,
                    left: order[..split].to_vec(),
                    right: order[split..].to_vec(),
                });
            }
        }
    }
    match best {
        None => leaf,
        Some(s) => {
            let left = grow_gini(x, y, s.left, depth + 1, params, rng);
            let right = grow_gini(x, y, s.right, depth + 1, params, rng);
            Node::Split {
                feature: s.feature,
                threshold: s.threshold,
                cover: n,
                gain: s.gain.max(0.0),
                left: Box::new(left),
                right: Box::new(right),
            }
        }
    }
}

/// Grows a least-squares regression tree on `target`; leaf values come from
/// `leaf_value(rows)`. Only strictly improving splits are taken.
pub(crate) fn grow_regression<L>(
    x: &Array2<f64>,
    target: &[f64],
    idx: Vec<usize>,
    depth: usize,
    max_depth: usize,
    min_samples_leaf: usize,
    leaf_value: &mut L,
) -> Node
where
    L: FnMut(&[usize]) -> f64,
{
    let n = idx.len() as f64;
    let make_leaf = |idx: &[usize], lv: &mut L| Node::Leaf {
        value: lv(idx),
        cover: idx.len() as f64,
    };
    if depth >= max_depth || idx.len() < 2 * min_samples_leaf.max(1) {
        return make_leaf(&idx, leaf_value);
    }
    let sum: f64 = idx.iter().map(|&i| target[i]).sum();
    let mut best: Option<SplitCandidate> = None;
    for f in 0..x.ncols() {
        let found = best_split_on_feature(x, &idx, f, min_samples_leaf, |order, split| {
            let ls: f64 = order[..split].iter().map(|&i| target[i]).sum();
            let nl = split as f64;
            let nr = n - nl;
            let rs = sum - ls;
            ls * ls / nl + rs * rs / nr - sum * sum / n
        });
        if let Some((gain, threshold, split, order)) = found {
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold,
                    gain,
                    left: order[..split].to_vec(),
                    right: order[split..].to_vec(),
                });
            }
        }
    }
    match best {
        Some(s) if s.gain > 1e-12 => {
            let left = grow_regression(x, target, s.left, depth + 1, max_depth, min_samples_leaf, leaf_value);
            let right = grow_regression(x, target, s.right, depth + 1, max_depth, min_samples_leaf, leaf_value);
            Node::Split {
                feature: s.feature,
                threshold: s.threshold,
                cover: n,
                gain: s.gain,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
        _ => make_leaf(&idx, leaf_value),
    }
}
