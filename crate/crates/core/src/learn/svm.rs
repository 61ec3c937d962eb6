//! C-SVM trained by sequential minimal optimization on the dual, with a
//! logistic calibration of the training margins.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// RBF width; `None` uses 1 / (F · variance of all feature values).
    pub gamma: Option<f64>,
    /// Maximal-violating-pair gap at which SMO stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// Default RBF width: 1 / (F · variance over every entry of `x`).
pub fn scale_gamma(x: &Array2<f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    /// Training rows with nonzero α.
    pub support: Array2<f64>,
    /// αᵢ·yᵢ for each support row.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Calibration p(flight) = 1 / (1 + exp(A·f + B)).
    pub platt_a: f64,
    pub platt_b: f64,
    /// Full dual solution, kept for KKT checks.
    pub alpha: Vec<f64>,
    pub iterations: usize,
}

impl SvmModel {
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.bias
            + self
                .support
                .rows()
                .into_iter()
                .zip(&self.dual_coef)
                .map(|(s, &c)| c * self.kernel.eval(s, x))
                .sum::<f64>()
    }

    pub fn probability(&self, x: ArrayView1<'_, f64>) -> f64 {
        sigmoid(-(self.platt_a * self.decision(x) + self.platt_b))
    }
}

const TAU: f64 = 1e-12;

struct Smo<'a> {
    q: Vec<Vec<f64>>,
    y: &'a [f64],
    alpha: Vec<f64>,
    grad: Vec<f64>,
    c: f64,
}

impl Smo<'_> {
    fn up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn low(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] > 0.0) || (self.y[t] < 0.0 && self.alpha[t] < self.c)
    }

    /// Second-order working-set selection; `None` once the gap is below `tol`.
    fn select(&self, tol: f64) -> Option<(usize, usize)> {
        let n = self.y.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..n {
            if self.up(t) {
                let v = -self.y[t] * self.grad[t];
                if v >= gmax {
                    gmax = v;
                    i = Some(t);
                }
            }
        }
        let i = i?;
        let mut gmin = f64::INFINITY;
        let mut best = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !self.low(t) {
                continue;
            }
            let v = -self.y[t] * self.grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let mut a = self.q[i][i] + self.q[t][t] - 2.0 * self.y[i] * self.y[t] * self.q[i][t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj <= best_obj {
                    best_obj = obj;
                    best = Some(t);
                }
            }
        }
        if gmax - gmin < tol {
            return None;
        }
        best.map(|j| (i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (yi, yj) = (self.y[i], self.y[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        // q holds y-weighted entries: Q_ij = yᵢ yⱼ K_ij
        let qij = self.q[i][j];
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let mut quad = self.q[i][i] + self.q[j][j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = self.q[i][i] + self.q[j][j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        let (di, dj) = (ai - old_i, aj - old_j);
        for k in 0..self.grad.len() {
            self.grad[k] += self.q[i][k] * di + self.q[j][k] * dj;
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
    }

    /// Bias b in f(x) = Σ αᵢ yᵢ K(xᵢ, x) + b.
    fn bias(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free_sum = 0.0;
        let mut n_free = 0usize;
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            if self.alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                free_sum += yg;
            }
        }
        let rho = if n_free > 0 {
            free_sum / n_free as f64
        } else {
            0.5 * (ub + lb)
        };
        -rho
    }
}

/// Fits Platt's sigmoid p = 1 / (1 + exp(A f + B)) to margins `f` by Newton
/// iterations with backtracking (regularized targets as in Platt scaling).
fn fit_platt(f: &[f64], y: &[f64]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v > 0.0 { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        f.iter()
            .zip(&t)
            .map(|(&fi, &ti)| {
                let z = fi * a + b;
                if z >= 0.0 {
                    ti * z + (-z).exp().ln_1p()
                } else {
                    (ti - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&fi, &ti) in f.iter().zip(&t) {
            let z = fi * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += fi * fi * d2;
            h22 += d2;
            h21 += fi * d2;
            let d1 = ti - p;
            g1 += fi * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step *= 0.5;
        }
        if step < 1e-10 {
            break;
        }
    }
    (a, b)
}

/// Trains on 0/1 labels `y01`.
pub(crate) fn fit_svm(x: &Array2<f64>, y01: &[f64], kernel: Kernel, params: &SvmParams) -> SvmModel {
    let n = x.nrows();
    let y: Vec<f64> = y01.iter().map(|&v| if v > 0.5 { 1.0 } else { -1.0 }).collect();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = y[i] * y[j] * kernel.eval(x.row(i), x.row(j));
            q[i][j] = v;
            q[j][i] = v;
        }
    }
    let mut smo = Smo {
        q,
        y: &y,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        c: params.c,
    };
    let mut iterations = 0;
    while iterations < params.max_iter {
        match smo.select(params.tol) {
            Some((i, j)) => smo.update(i, j),
            None => break,
        }
        iterations += 1;
    }
    let bias = smo.bias();
    let support_idx: Vec<usize> = (0..n).filter(|&i| smo.alpha[i] > 0.0).collect();
    let mut model = SvmModel {
        kernel,
        c: params.c,
        support: x.select(ndarray::Axis(0), &support_idx),
        dual_coef: support_idx.iter().map(|&i| smo.alpha[i] * y[i]).collect(),
        bias,
        platt_a: 0.0,
        platt_b: 0.0,
        alpha: smo.alpha.clone(),
        iterations,
    };
    let margins: Vec<f64> = x.rows().into_iter().map(|r| model.decision(r)).collect();
    let (a, b) = fit_platt(&margins, &y);
    model.platt_a = a;
    model.platt_b = b;
    model
}

/// Largest KKT violation over the training set:
/// α = 0 needs y·f ≥ 1, 0 < α < C needs y·f = 1, α = C needs y·f ≤ 1.
pub fn kkt_violation(model: &SvmModel, x: &Array2<f64>, y01: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let y = if y01[i] > 0.5 { 1.0 } else { -1.0 };
        let m = y * model.decision(row);
        let a = model.alpha[i];
        let v = if a <= 0.0 {
            (1.0 - m).max(0.0)
        } else if a >= model.c {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}
