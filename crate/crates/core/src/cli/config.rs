//! JSON run configuration. Every key is optional; missing keys take the
//! defaults below, and command-line flags override both.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{FeatureSet, PreprocessPolicy};
use crate::ingest::{Orientation, IMPUTED_CT};
use crate::learn::{ClassifierKind, Hyperparameters};
use crate::stats::Thresholds;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub ct_table: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Gene → pathway CSV; the bundled reference annotation when absent.
    pub annotation: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    pub orientation: Orientation,
    pub imputation_value: f64,
    pub top_k: usize,
    pub classifiers: Vec<ClassifierKind>,
    /// Defaults to all genes plus the top-k set.
    pub feature_sets: Option<Vec<FeatureSet>>,
    pub seed: u64,
    pub policy: PreprocessPolicy,
    pub thresholds: Thresholds,
    /// |r| cut-off for correlation-network edges.
    pub edge_threshold: f64,
    /// Number of top consensus genes in the correlation network.
    pub network_genes: usize,
    pub n_clusters: usize,
    pub pca_components: usize,
    /// Genes for the per-sample deep-dive table.
    pub deep_dive_genes: Vec<String>,
    pub hyperparameters: Hyperparameters,
    /// Not part of the configuration hash.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Inputs::default(),
            orientation: Orientation::SamplesAsRows,
            imputation_value: IMPUTED_CT,
            top_k: 20,
            classifiers: ClassifierKind::ALL.to_vec(),
            feature_sets: None,
            seed: 42,
            policy: PreprocessPolicy::PaperFaithful,
            thresholds: Thresholds::default(),
            edge_threshold: 0.78,
            network_genes: 25,
            n_clusters: 2,
            pca_components: 5,
            deep_dive_genes: vec!["Ucp1".into()],
            hyperparameters: Hyperparameters::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative input paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&raw).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.inputs.ct_table,
            &mut cfg.inputs.labels,
            &mut cfg.inputs.annotation,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn feature_sets(&self) -> Vec<FeatureSet> {
        self.feature_sets
            .clone()
            .unwrap_or_else(|| vec![FeatureSet::All, FeatureSet::TopK(self.top_k)])
    }

    pub fn validate(&self) -> Result<()> {
        let th = &self.thresholds;
        if !(th.fc_up > 0.0 && th.fc_down > 0.0 && th.alpha > 0.0) {
            return Err(Error::arg("thresholds must be positive"));
        }
        if self.top_k == 0 {
            return Err(Error::arg("top_k must be ≥ 1"));
        }
        if !self.imputation_value.is_finite() {
            return Err(Error::arg("imputation_value must be finite"));
        }
        if !(0.0..=1.0).contains(&self.edge_threshold) {
            return Err(Error::arg("edge_threshold must lie in [0, 1]"));
        }
        if self.n_clusters == 0 || self.pca_components == 0 {
            return Err(Error::arg("n_clusters and pca_components must be ≥ 1"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::arg("classifier grid is empty"));
        }
        if self.feature_sets.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::arg("feature_sets is empty"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.output_dir = None;
        let json = serde_json::to_string(&c).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
