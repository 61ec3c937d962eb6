//! Exact Shapley values of tree conditional expectations.
//!
//! Both functions value a coalition `S` by descending the tree, following
//! `x` on splits over features in `S` and averaging the children by cover
//! otherwise. [`tree_shap`] does it in polynomial time by tracking the
//! proportion of subsets flowing down each path; [`brute_shap`] enumerates
//! all `2^F` coalitions.

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::learn::{Combine, Node, TreeEnsemble};

pub const BRUTE_MAX_FEATURES: usize = 20;

#[derive(Debug, Clone, Copy)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
    let l = path.len();
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    });
    let denom = (l + 1) as f64;
    for i in (0..l).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero * path[i].weight * (l - i) as f64 / denom;
    }
}

fn unwind(path: &mut Vec<PathElem>, i: usize) {
    let len = path.len();
    let (one, zero) = (path[i].one, path[i].zero);
    let mut next = path[len - 1].weight;
    for j in (0..len - 1).rev() {
        if one != 0.0 {
            let t = path[j].weight;
            path[j].weight = next * len as f64 / ((j + 1) as f64 * one);
            next = t - path[j].weight * zero * (len - 1 - j) as f64 / len as f64;
        } else {
            path[j].weight = path[j].weight * len as f64 / (zero * (len - 1 - j) as f64);
        }
    }
    for j in i..len - 1 {
        path[j].feature = path[j + 1].feature;
        path[j].zero = path[j + 1].zero;
        path[j].one = path[j + 1].one;
    }
    path.pop();
}

/// Total weight of `path` with element `i` unwound, without mutating it.
fn unwound_sum(path: &[PathElem], i: usize) -> f64 {
    let len = path.len();
    let (one, zero) = (path[i].one, path[i].zero);
    let mut next = path[len - 1].weight;
    let mut total = 0.0;
    for j in (0..len - 1).rev() {
        let frac = (len - 1 - j) as f64 / len as f64;
        if one != 0.0 {
            let t = next * len as f64 / ((j + 1) as f64 * one);
            total += t;
            next = path[j].weight - t * zero * frac;
        } else if zero != 0.0 {
            total += path[j].weight / zero / frac;
        }
    }
    total
}

fn recurse(
    node: &Node,
    x: ArrayView1<'_, f64>,
    parent: &[PathElem],
    zero: f64,
    one: f64,
    feature: Option<usize>,
    phi: &mut [f64],
) {
    let mut path = parent.to_vec();
    extend(&mut path, zero, one, feature);
    match node {
        Node::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let e = path[i];
                phi[e.feature.expect("only the root lacks a feature")] += w * (e.one - e.zero) * value;
            }
        }
        Node::Split {
            feature: f,
            threshold,
            cover,
            left,
            right,
            ..
        } => {
            let (hot, cold) = if x[*f] <= *threshold {
                (left, right)
            } else {
                (right, left)
            };
            let (mut iz, mut io) = (1.0, 1.0);
            if let Some(k) = path.iter().position(|e| e.feature == Some(*f)) {
                iz = path[k].zero;
                io = path[k].one;
                unwind(&mut path, k);
            }
            recurse(hot, x, &path, iz * hot.cover() / cover, io, Some(*f), phi);
            recurse(cold, x, &path, iz * cold.cover() / cover, 0.0, Some(*f), phi);
        }
    }
}

/// Shapley values of one tree's output; they sum to `predict(x) - expected_value()`.
pub fn tree_shap_single(tree: &Node, x: ArrayView1<'_, f64>, phi: &mut [f64]) {
    recurse(tree, x, &[], 1.0, 1.0, None, phi);
}

fn check_width(e: &TreeEnsemble, x: ArrayView1<'_, f64>) -> Result<()> {
    if x.len() != e.n_features {
        return Err(Error::contract(format!(
            "ensemble expects {} features, sample has {}",
            e.n_features,
            x.len()
        )));
    }
    Ok(())
}

fn aggregate(e: &TreeEnsemble, mut phi: Vec<f64>) -> (Vec<f64>, f64) {
    if let Combine::Average = e.combine {
        if !e.trees.is_empty() {
            let n = e.trees.len() as f64;
            phi.iter_mut().for_each(|p| *p /= n);
        }
    }
    (phi, e.expected_output())
}

/// Exact ensemble SHAP values and the base value they are relative to.
///
/// Averaging ensembles explain the mean tree output, additive ones the
/// margin including its constant initial score.
pub fn tree_shap(e: &TreeEnsemble, x: ArrayView1<'_, f64>) -> Result<(Vec<f64>, f64)> {
    check_width(e, x)?;
    let mut phi = vec![0.0; e.n_features];
    for t in &e.trees {
        tree_shap_single(t, x, &mut phi);
    }
    Ok(aggregate(e, phi))
}

fn coalition_value(node: &Node, x: ArrayView1<'_, f64>, mask: u32) -> f64 {
    match node {
        Node::Leaf { value, .. } => *value,
        Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            if mask & (1 << feature) != 0 {
                let next = if x[*feature] <= *threshold { left } else { right };
                coalition_value(next, x, mask)
            } else {
                let (lc, rc) = (left.cover(), right.cover());
                (lc * coalition_value(left, x, mask) + rc * coalition_value(right, x, mask))
                    / (lc + rc)
            }
        }
    }
}

/// Shapley values by enumerating every feature coalition.
pub fn brute_shap(e: &TreeEnsemble, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
    let f = e.n_features;
    if f > BRUTE_MAX_FEATURES {
        return Err(Error::TooManyFeatures(f, BRUTE_MAX_FEATURES));
    }
    check_width(e, x)?;
    let mut phi = vec![0.0; f];
    if f == 0 {
        return Ok(phi);
    }
    // weight[s] = s! (F - s - 1)! / F! = 1 / (F * C(F-1, s))
    let mut weight = vec![0.0; f];
    let mut binom = 1.0;
    for (s, w) in weight.iter_mut().enumerate() {
        *w = 1.0 / (f as f64 * binom);
        binom = binom * (f - 1 - s) as f64 / (s + 1) as f64;
    }
    for t in &e.trees {
        let values: Vec<f64> = (0..1u32 << f).map(|m| coalition_value(t, x, m)).collect();
        for (i, p) in phi.iter_mut().enumerate() {
            let bit = 1u32 << i;
            let mut acc = 0.0;
            for mask in 0..1u32 << f {
                if mask & bit == 0 {
                    acc += weight[mask.count_ones() as usize] * (values[(mask | bit) as usize] - values[mask as usize]);
                }
            }
            *p += acc;
        }
    }
    Ok(aggregate(e, phi).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn leaf(value: f64, cover: f64) -> Box<Node> {
        Box::new(Node::Leaf { value, cover })
    }

    fn split(feature: usize, threshold: f64, left: Box<Node>, right: Box<Node>) -> Box<Node> {
        let cover = left.cover() + right.cover();
        Box::new(Node::Split {
            feature,
            threshold,
            cover,
            gain: 0.0,
            left,
            right,
        })
    }

    fn single(tree: Box<Node>, n_features: usize) -> TreeEnsemble {
        TreeEnsemble {
            trees: vec![*tree],
            combine: Combine::Additive { init: 0.0 },
            n_features,
        }
    }

    #[test]
    fn stump_only_credits_its_feature() {
        let e = single(split(0, 0.5, leaf(1.0, 3.0), leaf(5.0, 1.0)), 3);
        let x = array![0.0, 9.0, 9.0];
        let (phi, base) = tree_shap(&e, x.view()).unwrap();
        assert_eq!(base, 2.0);
        assert_eq!(phi, vec![-1.0, 0.0, 0.0]);
        assert_eq!(brute_shap(&e, x.view()).unwrap(), phi);
    }

    #[test]
    fn interchangeable_features_share_credit() {
        let t = split(
            1,
            0.0,
            split(2, 0.0, leaf(0.0, 1.0), leaf(1.0, 1.0)),
            split(2, 0.0, leaf(1.0, 1.0), leaf(3.0, 1.0)),
        );
        let e = single(t, 3);
        let x = array![7.0, 1.0, 1.0];
        let (phi, base) = tree_shap(&e, x.view()).unwrap();
        assert!((phi[1] - phi[2]).abs() < 1e-15);
        assert_eq!(phi[0], 0.0);
        assert!((base + phi.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn depth_two_matches_enumeration() {
        let t = split(
            0,
            0.0,
            split(1, 1.0, leaf(2.0, 4.0), leaf(-1.0, 2.0)),
            split(2, -1.0, leaf(0.5, 1.0), leaf(3.0, 3.0)),
        );
        let e = single(t, 3);
        for x in [array![-1.0, 0.0, 0.0], array![1.0, 2.0, -2.0], array![1.0, 0.0, 5.0]] {
            let (phi, _) = tree_shap(&e, x.view()).unwrap();
            let brute = brute_shap(&e, x.view()).unwrap();
            for (a, b) in phi.iter().zip(&brute) {
                assert!((a - b).abs() < 1e-12, "{phi:?} vs {brute:?}");
            }
        }
    }

    #[test]
    fn repeated_feature_on_path() {
        let t = split(
            0,
            0.0,
            split(0, -1.0, leaf(1.0, 2.0), leaf(2.0, 3.0)),
            split(1, 0.0, leaf(4.0, 1.0), leaf(0.0, 4.0)),
        );
        let e = single(t, 2);
        let x = array![-0.5, 1.0];
        let (phi, base) = tree_shap(&e, x.view()).unwrap();
        let brute = brute_shap(&e, x.view()).unwrap();
        for (a, b) in phi.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((base + phi.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn width_and_size_errors() {
        let e = single(leaf(1.0, 1.0), 21);
        assert!(matches!(brute_shap(&e, ndarray::Array1::zeros(21).view()), Err(Error::TooManyFeatures(21, 20))));
        assert!(matches!(tree_shap(&e, array![1.0].view()), Err(Error::Contract(_))));
    }
}
