use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 3 }
    }
}

/// Stored training set; p(flight) is the fraction of flight labels among
/// the `k` nearest (Euclidean) neighbours, distance ties going to the
/// earlier training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

impl KnnModel {
    pub fn positive_fraction(&self, q: ArrayView1<'_, f64>) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(q.iter()).map(|(a, b)| (a - b).powi(2)).sum();
                (d, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(dist.len()).max(1);
        dist.iter().take(k).map(|&(_, i)| self.y[i]).sum::<f64>() / k as f64
    }
}
