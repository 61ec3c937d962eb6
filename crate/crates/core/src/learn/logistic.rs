use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// L2 penalty strength λ on the weights (intercept unpenalized).
    pub l2: f64,
    /// Stop when the gradient norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized negative log-likelihood at `theta = [w…, b]`:
/// Σ log(1 + exp(−sᵢ zᵢ)) + λ/2 ‖w‖².
pub fn objective(theta: &[f64], x: &Array2<f64>, y: &[f64], l2: f64) -> f64 {
    let f = x.ncols();
    let (w, b) = (&theta[..f], theta[f]);
    let mut total = 0.0;
    for (row, &yi) in x.rows().into_iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        total += if yi > 0.5 { softplus(-z) } else { softplus(z) };
    }
    total + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`objective`].
pub fn gradient(theta: &[f64], x: &Array2<f64>, y: &[f64], l2: f64) -> Vec<f64> {
    let f = x.ncols();
    let mut g = vec![0.0; f + 1];
    for (row, &yi) in x.rows().into_iter().zip(y) {
        let z = theta[f] + row.iter().zip(&theta[..f]).map(|(a, c)| a * c).sum::<f64>();
        let r = sigmoid(z) - yi;
        for (gj, xj) in g.iter_mut().zip(row.iter()) {
            *gj += r * xj;
        }
        g[f] += r;
    }
    for j in 0..f {
        g[j] += l2 * theta[j];
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Damped Newton iterations with Armijo backtracking.
pub(crate) fn fit_logistic(x: &Array2<f64>, y: &[f64], params: &LogisticParams) -> LogisticModel {
    let (n, f) = x.dim();
    let dim = f + 1;
    let mut theta = vec![0.0; dim];
    let mut obj = objective(&theta, x, y, params.l2);
    for _ in 0..params.max_iter {
        let g = gradient(&theta, x, y, params.l2);
        if norm(&g) < params.tol {
            break;
        }
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            let row = x.row(i);
            let z = theta[f] + row.iter().zip(&theta[..f]).map(|(a, c)| a * c).sum::<f64>();
            let p = sigmoid(z);
            let wgt = p * (1.0 - p);
            for a in 0..dim {
                let xa = if a < f { row[a] } else { 1.0 };
                for b in a..dim {
                    let xb = if b < f { row[b] } else { 1.0 };
                    h[(a, b)] += wgt * xa * xb;
                }
            }
        }
        for a in 0..dim {
            if a < f {
                h[(a, a)] += params.l2;
            }
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        let gv = DVector::from_vec(g.clone());
        let dir = match h.clone().cholesky() {
            Some(ch) => -ch.solve(&gv),
            None => match h.lu().solve(&gv) {
                Some(s) => -s,
                None => -gv.clone(),
            },
        };
        let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(dir.iter()).map(|(t, d)| t + step * d).collect();
            let cobj = objective(&cand, x, y, params.l2);
            if cobj <= obj + 1e-4 * step * slope {
                theta = cand;
                obj = cobj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    LogisticModel {
        weights: theta[..f].to_vec(),
        intercept: theta[f],
    }
}
