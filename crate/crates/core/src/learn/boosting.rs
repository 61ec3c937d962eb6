use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::tree::{grow_regression, Combine, TreeEnsemble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostingParams {
    pub n_stages: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        Self {
            n_stages: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
        }
    }
}

fn log_loss_term(y: f64, margin: f64) -> f64 {
    // log(1 + exp(-s·m)) with s = ±1, computed stably
    let z = if y > 0.5 { margin } else { -margin };
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// Mean logistic loss of margins `f` against 0/1 labels.
pub fn logistic_loss(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(&y, &m)| log_loss_term(y, m)).sum::<f64>() / y.len() as f64
}

/// Fitted boosting ensemble plus the training loss after each stage
/// (index 0 is the prior-only model).
pub(crate) struct BoostingFit {
    pub ensemble: TreeEnsemble,
    pub stage_losses: Vec<f64>,
}

/// Stagewise logistic-loss boosting with least-squares trees on the
/// gradient. Each leaf takes a shrunken Newton step, halved until that
/// leaf's loss does not increase, so the training loss never goes up.
pub(crate) fn fit_boosting(x: &Array2<f64>, y: &[f64], params: &BoostingParams) -> BoostingFit {
    let (n, f) = x.dim();
    let prior = y.iter().sum::<f64>() / n as f64;
    let init = (prior / (1.0 - prior)).ln();
    let mut margin = vec![init; n];
    let mut stage_losses = vec![logistic_loss(y, &margin)];
    let mut trees = Vec::with_capacity(params.n_stages);
    for _ in 0..params.n_stages {
        let residual: Vec<f64> = y
            .iter()
            .zip(&margin)
            .map(|(&y, &m)| y - sigmoid(m))
            .collect();
        let mut leaf_value = |rows: &[usize]| -> f64 {
            let num: f64 = rows.iter().map(|&i| residual[i]).sum();
            let den: f64 = rows
                .iter()
                .map(|&i| {
                    let p = sigmoid(margin[i]);
                    p * (1.0 - p)
                })
                .sum();
            if den < 1e-150 {
                return 0.0;
            }
            let loss_at = |step: f64| -> f64 {
                rows.iter()
                    .map(|&i| log_loss_term(y[i], margin[i] + step))
                    .sum()
            };
            let base = loss_at(0.0);
            let mut step = params.learning_rate * num / den;
            for _ in 0..60 {
                if loss_at(step) <= base {
                    return step;
                }
                step *= 0.5;
            }
            0.0
        };
        let tree = grow_regression(
            x,
            &residual,
            (0..n).collect(),
            0,
            params.max_depth,
            params.min_samples_leaf,
            &mut leaf_value,
        );
        for (i, m) in margin.iter_mut().enumerate() {
            *m += tree.predict(x.row(i));
        }
        stage_losses.push(logistic_loss(y, &margin));
        trees.push(tree);
    }
    BoostingFit {
        ensemble: TreeEnsemble {
            trees,
            combine: Combine::Additive { init },
            n_features: f,
        },
        stage_losses,
    }
}
