//! PCA, Pearson correlation matrices, average-linkage clustering and
//! correlation-network edges.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Axis as NdAxis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Class, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub feature_names: Vec<String>,
    /// F × C loadings, orthonormal columns.
    pub components: Array2<f64>,
    /// S × C projected coordinates.
    pub scores: Array2<f64>,
    pub singular_values: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// PCA by SVD of the column-centered matrix.
///
/// Explained-variance ratios are σᵢ² / Σσⱼ² over all singular values. Each
/// loading column is sign-flipped so its largest-magnitude entry is positive.
pub fn pca(x: &FeatureMatrix, n_components: usize) -> Result<PcaResult> {
    let (s, f) = x.values().dim();
    let max = s.saturating_sub(1).min(f);
    if n_components == 0 || n_components > max {
        return Err(Error::arg(format!(
            "n_components = {n_components} outside 1..={max}"
        )));
    }
    let means = x.values().mean_axis(NdAxis(0)).expect("non-empty");
    let centered = x.values() - &means;
    let dm = DMatrix::from_fn(s, f, |i, j| centered[[i, j]]);
    let svd = dm.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let total: f64 = sv.iter().map(|v| v * v).sum();

    let mut components = Array2::zeros((f, n_components));
    for (c, &k) in order.iter().take(n_components).enumerate() {
        let row = v_t.row(k);
        let (mut best, mut best_abs) = (0, -1.0);
        for j in 0..f {
            if row[j].abs() > best_abs {
                best_abs = row[j].abs();
                best = j;
            }
        }
        let sign = if row[best] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..f {
            components[[j, c]] = sign * row[j];
        }
    }
    let scores = centered.dot(&components);
    let singular_values: Vec<f64> = order.iter().map(|&k| sv[k]).collect();
    let explained_variance_ratio = singular_values
        .iter()
        .take(n_components)
        .map(|v| if total > 0.0 { v * v / total } else { 0.0 })
        .collect();
    Ok(PcaResult {
        feature_names: x.feature_names().to_vec(),
        components,
        scores,
        singular_values,
        explained_variance_ratio,
    })
}

/// Which axis of a samples × genes matrix holds the correlated entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Correlate rows (samples) across genes.
    Samples,
    /// Correlate columns (genes) across samples.
    Genes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub r: Array2<f64>,
    /// Entities with zero variance; their off-diagonal r is 0.
    pub constant: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.r[[i, j]])
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Pairwise Pearson correlation between the entities on `axis`.
pub fn correlation_matrix(m: &Array2<f64>, names: &[String], axis: Axis) -> Result<CorrelationMatrix> {
    let data = match axis {
        Axis::Samples => m.t().to_owned(),
        Axis::Genes => m.to_owned(),
    };
    let (n_obs, n) = data.dim();
    if names.len() != n {
        return Err(Error::arg(format!("{} names for {n} entities", names.len())));
    }
    if n_obs < 3 {
        return Err(Error::arg(format!(
            "correlation needs at least 3 observations, got {n_obs}"
        )));
    }
    let means = data.mean_axis(NdAxis(0)).expect("non-empty");
    let centered = &data - &means;
    let norms: Array1<f64> = centered
        .axis_iter(NdAxis(1))
        .map(|c| c.dot(&c).sqrt())
        .collect();
    let constant: Vec<bool> = norms.iter().map(|&v| v <= 1e-12 * (1.0 + v)).collect();
    let mut r = Array2::<f64>::eye(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if constant[i] || constant[j] {
                0.0
            } else {
                let dot = centered.column(i).dot(&centered.column(j));
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            r[[i, j]] = v;
            r[[j, i]] = v;
        }
    }
    Ok(CorrelationMatrix {
        names: names.to_vec(),
        r,
        constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Cluster ids: leaves are `0..N`, the cluster created by merge `i` is `N + i`.
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub names: Vec<String>,
    pub merges: Vec<Merge>,
    pub leaf_order: Vec<usize>,
    pub k: usize,
    /// Cluster index per leaf for the `k`-cluster cut, numbered by smallest member.
    pub assignments: Vec<usize>,
}

impl Dendrogram {
    /// Flat clustering obtained by undoing the last `k − 1` merges.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.names.len();
        if k == 0 || k > n {
            return Err(Error::arg(format!("cluster count {k} outside 1..={n}")));
        }
        let mut parent: Vec<usize> = (0..(2 * n).max(1)).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (step, m) in self.merges.iter().take(n - k).enumerate() {
            let id = n + step;
            let a = find(&mut parent, m.left);
            let b = find(&mut parent, m.right);
            parent[a] = id;
            parent[b] = id;
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut out = vec![0; n];
        for (leaf, slot) in out.iter_mut().enumerate() {
            let root = find(&mut parent, leaf);
            *slot = match roots.iter().position(|&r| r == root) {
                Some(i) => i,
                None => {
                    roots.push(root);
                    roots.len() - 1
                }
            };
        }
        Ok(out)
    }
}

/// Average-linkage agglomeration on d = 1 − r with a `k`-cluster cut.
/// Ties go to the pair with the smallest cluster ids.
pub fn hcluster(c: &CorrelationMatrix, k: usize) -> Result<Dendrogram> {
    let n = c.len();
    if k == 0 || k > n {
        return Err(Error::arg(format!("cluster count {k} outside 1..={n}")));
    }
    // distances indexed by cluster id
    let total = 2 * n;
    let mut dist = vec![vec![f64::INFINITY; total]; total];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = 1.0 - c.r[[i, j]];
        }
    }
    let mut size = vec![0usize; total];
    size[..n].fill(1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut children: Vec<Option<(usize, usize)>> = vec![None; total];
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = dist[a][b];
                if best.is_none_or(|(_, _, bd)| d.total_cmp(&bd) == Ordering::Less) {
                    best = Some((a, b, d));
                }
            }
        }
        let (a, b, height) = best.expect("at least two active clusters");
        let id = n + step;
        size[id] = size[a] + size[b];
        for &o in &active {
            if o == a || o == b {
                continue;
            }
            let d = (size[a] as f64 * dist[a][o] + size[b] as f64 * dist[b][o]) / size[id] as f64;
            dist[id][o] = d;
            dist[o][id] = d;
        }
        active.retain(|&x| x != a && x != b);
        active.push(id);
        children[id] = Some((a, b));
        merges.push(Merge {
            left: a,
            right: b,
            height,
            size: size[id],
        });
    }
    let mut leaf_order = Vec::with_capacity(n);
    if n > 0 {
        let mut stack = vec![active[0]];
        while let Some(node) = stack.pop() {
            match children[node] {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => leaf_order.push(node),
            }
        }
    }
    let mut d = Dendrogram {
        names: c.names.clone(),
        merges,
        leaf_order,
        k,
        assignments: Vec::new(),
    };
    d.assignments = d.cut(k)?;
    Ok(d)
}

/// Fraction of samples whose cluster's majority class matches their own.
pub fn cluster_purity(assignments: &[usize], labels: &[Class]) -> f64 {
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![[0usize; 2]; k];
    for (&a, &l) in assignments.iter().zip(labels) {
        counts[a][l.index()] += 1;
    }
    let majority: usize = counts.iter().map(|c| c[0].max(c[1])).sum();
    majority as f64 / assignments.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub r: f64,
}

/// All unordered pairs with |r| ≥ `threshold`, strongest first (ties by names).
pub fn network_edges(c: &CorrelationMatrix, threshold: f64) -> Vec<Edge> {
    let n = c.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let r = c.r[[i, j]];
            if r.abs() >= threshold {
                edges.push(Edge {
                    a: c.names[i].clone(),
                    b: c.names[j].clone(),
                    r,
                });
            }
        }
    }
    edges.sort_by(|x, y| {
        y.r.abs()
            .total_cmp(&x.r.abs())
            .then_with(|| x.a.cmp(&y.a))
            .then_with(|| x.b.cmp(&y.b))
    });
    edges
}
