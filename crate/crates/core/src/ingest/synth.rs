use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Class, CtMatrix};
use crate::error::{Error, Result};

/// Parameters of a planted two-group cohort. The first `n_signal_genes`
/// genes carry the effect; flight samples have their mean Ct lowered by
/// `effect_size_ct` on those genes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohortConfig {
    pub n_per_group: usize,
    pub n_genes: usize,
    pub n_signal_genes: usize,
    pub effect_size_ct: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticCohortConfig {
    fn default() -> Self {
        Self {
            n_per_group: 8,
            n_genes: 89,
            n_signal_genes: 1,
            effect_size_ct: 3.61,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

fn gene_name(j: usize) -> String {
    format!("Gene{:03}", j + 1)
}

pub fn signal_gene_names(cfg: &SyntheticCohortConfig) -> Vec<String> {
    (0..cfg.n_signal_genes).map(gene_name).collect()
}

/// Deterministic synthetic cohort: ground samples `G01…` then flight samples `F01…`.
pub fn synthesize_cohort(cfg: &SyntheticCohortConfig) -> Result<CtMatrix> {
    if cfg.n_signal_genes > cfg.n_genes {
        return Err(Error::arg("n_signal_genes exceeds n_genes"));
    }
    if !(cfg.noise_sd > 0.0) || !cfg.effect_size_ct.is_finite() {
        return Err(Error::arg("noise_sd must be positive and effect finite"));
    }
    if cfg.n_per_group == 0 || cfg.n_genes == 0 {
        return Err(Error::arg("cohort needs samples and genes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sd).expect("positive sd");
    let n = 2 * cfg.n_per_group;
    let mut values = Array2::zeros((n, cfg.n_genes));
    for j in 0..cfg.n_genes {
        let base: f64 = rng.random_range(20.0..34.0);
        for i in 0..n {
            let shift = if i >= cfg.n_per_group && j < cfg.n_signal_genes {
                -cfg.effect_size_ct
            } else {
                0.0
            };
            values[[i, j]] = base + shift + noise.sample(&mut rng);
        }
    }
    let mut sample_ids = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..cfg.n_per_group {
        sample_ids.push(format!("G{:02}", i + 1));
        labels.push(Class::GroundControl);
    }
    for i in 0..cfg.n_per_group {
        sample_ids.push(format!("F{:02}", i + 1));
        labels.push(Class::Flight);
    }
    CtMatrix::new(
        sample_ids,
        (0..cfg.n_genes).map(gene_name).collect(),
        values,
        labels,
    )
}
