#![allow(dead_code)]

use qpcr_xai::learn::{Combine, Node, TreeEnsemble};
use rand::Rng;

/// Random tree with positive covers that sum correctly at every split.
pub fn random_tree(rng: &mut impl Rng, n_features: usize, depth: usize, cover: f64) -> Node {
    if depth == 0 || rng.random_bool(0.2) {
        return Node::Leaf {
            value: rng.random_range(-2.0..2.0),
            cover,
        };
    }
    let frac = rng.random_range(0.05..0.95);
    Node::Split {
        feature: rng.random_range(0..n_features),
        threshold: rng.random_range(-1.0..1.0),
        cover,
        gain: 0.0,
        left: Box::new(random_tree(rng, n_features, depth - 1, cover * frac)),
        right: Box::new(random_tree(rng, n_features, depth - 1, cover * (1.0 - frac))),
    }
}

pub fn random_ensemble(rng: &mut impl Rng, max_features: usize, max_depth: usize) -> TreeEnsemble {
    let n_features = rng.random_range(1..=max_features);
    let depth = rng.random_range(1..=max_depth);
    let n_trees = rng.random_range(1..=3);
    let trees = (0..n_trees)
        .map(|_| {
            let cover = rng.random_range(1.0..50.0);
            random_tree(rng, n_features, depth, cover)
        })
        .collect();
    let combine = if rng.random_bool(0.5) {
        Combine::Average
    } else {
        Combine::Additive {
            init: rng.random_range(-1.0..1.0),
        }
    };
    TreeEnsemble {
        trees,
        combine,
        n_features,
    }
}

/// Two-sided Student-t tail by integrating over the angle substitution
/// t = sqrt(df) tan θ, which turns the density into cos^(df-1) θ. A second
/// substitution θ = π/2 - s² keeps the integrand smooth near π/2.
pub fn t_two_sided_by_quadrature(t: f64, df: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let lo = (t.abs() / df.sqrt()).atan();
    let f = |s: f64| 2.0 * s * (s * s).sin().powf(df - 1.0);
    simpson(f, 0.0, (half_pi - lo).sqrt(), 20_000) / simpson(f, 0.0, half_pi.sqrt(), 20_000)
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Welch statistic and df written out directly from the definitions.
pub fn welch_reference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (va, vb) = (var(a) / a.len() as f64, var(b) / b.len() as f64);
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2)
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    (t, df)
}
