//! Small fully connected network: input → hidden… → 2 logits, ReLU hidden
//! activations, inverted dropout during training, Adam on full batches.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetParams {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for NetParams {
    fn default() -> Self {
        Self {
            hidden: vec![16, 8],
            dropout: 0.3,
            learning_rate: 1e-3,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// out × in
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    pub layers: Vec<Dense>,
}

struct Cache {
    /// Input to each layer (post-activation, post-dropout of the previous one).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Array2<f64>>,
    /// Dropout multipliers applied after each hidden layer.
    masks: Vec<Option<Array2<f64>>>,
}

impl NetModel {
    /// PyTorch-style init: weights and biases ~ U(−1/√fan_in, 1/√fan_in).
    pub fn init(sizes: &[usize], rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
                Dense {
                    weight: Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-bound..bound)),
                    bias: Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..bound)),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.weight.iter_mut() {
                *w = p[k];
                k += 1;
            }
            for b in l.bias.iter_mut() {
                *b = p[k];
                k += 1;
            }
        }
    }

    fn forward(&self, x: &Array2<f64>, dropout: Option<(f64, &mut ChaCha8Rng)>) -> (Array2<f64>, Cache) {
        let mut cache = Cache {
            inputs: Vec::new(),
            pre: Vec::new(),
            masks: Vec::new(),
        };
        let mut dropout = dropout;
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            cache.inputs.push(h.clone());
            let z = h.dot(&layer.weight.t()) + &layer.bias;
            if li == last {
                return (z, cache);
            }
            cache.pre.push(z.clone());
            let mut a = z.mapv(|v| v.max(0.0));
            let mask = match dropout.as_mut() {
                Some((rate, rng)) if *rate > 0.0 => {
                    let keep = 1.0 - *rate;
                    let m = Array2::from_shape_fn(a.dim(), |_| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    a *= &m;
                    Some(m)
                }
                _ => None,
            };
            cache.masks.push(mask);
            h = a;
        }
        unreachable!("network has at least one layer")
    }

    fn backward(&self, logits: &Array2<f64>, y: &[usize], cache: &Cache) -> (f64, Vec<f64>) {
        let n = logits.nrows() as f64;
        let mut loss = 0.0;
        let mut delta = Array2::zeros(logits.dim());
        for (i, row) in logits.rows().into_iter().enumerate() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss -= row[y[i]] - lse;
            for (k, &v) in row.iter().enumerate() {
                let p = (v - lse).exp();
                delta[[i, k]] = (p - if k == y[i] { 1.0 } else { 0.0 }) / n;
            }
        }
        loss /= n;
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        for li in (0..self.layers.len()).rev() {
            let gw = delta.t().dot(&cache.inputs[li]);
            let gb = delta.sum_axis(Axis(0));
            grads.push((gw, gb));
            if li > 0 {
                let mut d = delta.dot(&self.layers[li].weight);
                if let Some(m) = &cache.masks[li - 1] {
                    d *= m;
                }
                d.zip_mut_with(&cache.pre[li - 1], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = d;
            }
        }
        grads.reverse();
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads {
            flat.extend(gw.iter());
            flat.extend(gb.iter());
        }
        (loss, flat)
    }

    /// Mean cross-entropy and its gradient with dropout disabled.
    pub fn loss_and_gradient(&self, x: &Array2<f64>, y: &[usize]) -> (f64, Vec<f64>) {
        let (logits, cache) = self.forward(x, None);
        self.backward(&logits, y, &cache)
    }

    pub fn loss(&self, x: &Array2<f64>, y: &[usize]) -> f64 {
        self.loss_and_gradient(x, y).0
    }

    pub fn logits(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let z = layer.weight.dot(&h) + &layer.bias;
            h = if li == last { z } else { z.mapv(|v| v.max(0.0)) };
        }
        h
    }

    /// Decision value z₁ − z₀; p(flight) is its logistic.
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        let z = self.logits(x);
        z[1] - z[0]
    }
}

pub(crate) fn fit_net(x: &Array2<f64>, y: &[usize], params: &NetParams, seed: u64) -> NetModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes = vec![x.ncols()];
    sizes.extend(&params.hidden);
    sizes.push(2);
    let mut net = NetModel::init(&sizes, &mut rng);
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut theta = net.params();
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    for epoch in 1..=params.epochs {
        let (logits, cache) = net.forward(x, Some((params.dropout, &mut rng)));
        let (_, g) = net.backward(&logits, y, &cache);
        let bc1 = 1.0 - f64::powi(b1, epoch as i32);
        let bc2 = 1.0 - f64::powi(b2, epoch as i32);
        for k in 0..theta.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let mh = m[k] / bc1;
            let vh = v[k] / bc2;
            theta[k] -= params.learning_rate * mh / (vh.sqrt() + eps);
        }
        net.set_params(&theta);
    }
    net
}
