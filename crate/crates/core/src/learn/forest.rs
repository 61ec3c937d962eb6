use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_gini, Combine, GiniParams, TreeEnsemble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means ⌊√F⌋.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

/// Bootstrap-aggregated Gini trees. Tree `t` draws from its own ChaCha
/// stream `t` of `seed`, so the result is independent of thread count.
pub(crate) fn fit_forest(x: &Array2<f64>, y: &[f64], params: &ForestParams, seed: u64) -> TreeEnsemble {
    let (n, f) = x.dim();
    let max_features = params
        .max_features
        .unwrap_or(((f as f64).sqrt().floor() as usize).max(1))
        .clamp(1, f.max(1));
    let gini = GiniParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow_gini(x, y, bootstrap, 0, &gini, &mut rng)
        })
        .collect();
    TreeEnsemble {
        trees,
        combine: Combine::Average,
        n_features: f,
    }
}
