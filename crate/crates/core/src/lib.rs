//! Explainable machine-learning pipeline for small-cohort RT-qPCR data.
//!
//! The crate takes a table of qPCR cycle-threshold (Ct) values with binary
//! sample labels (ground control vs. flight) and produces:
//!
//! * ΔΔCt differential expression with Welch tests and Benjamini–Hochberg q-values ([`stats`])
//! * PCA, correlation matrices, average-linkage clustering and correlation networks ([`decomp`])
//! * seven from-scratch classifiers behind one probability contract ([`learn`])
//! * leave-one-out cross-validation and classification metrics ([`eval`])
//! * exact TreeSHAP attributions and a consensus feature ranking ([`explain`])
//! * a command-line front end writing CSV/SVG/JSON artifacts ([`cli`])
//!
//! ```no_run
//! use qpcr_xai::prelude::*;
//!
//! # fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
//! let labels = parse_labels(&std::fs::read_to_string("labels.csv")?)?;
//! let raw = std::fs::read_to_string("ct.csv")?;
//! let ct = impute_undetermined(&parse_ct_table(&raw, Orientation::SamplesAsRows, &labels)?);
//! let dge = differential_expression(&ct, &Thresholds::default())?;
//! # let _ = dge;
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod decomp;
pub mod error;
pub mod eval;
pub mod format;
pub mod explain;
pub mod ingest;
pub mod learn;
pub mod stats;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::decomp::{
        correlation_matrix, hcluster, network_edges, pca, Axis, CorrelationMatrix, Dendrogram,
        PcaResult,
    };
    pub use crate::error::{Error, Result};
    pub use crate::eval::{
        classification_metrics, loocv, roc_auc, CvReport, FeatureSet, PreprocessPolicy,
    };
    pub use crate::explain::{
        brute_shap, consensus_rank, explain_classifier, shap_summary, tree_shap, ConsensusRecord,
        ShapAttribution,
    };
    pub use crate::ingest::{
        impute_undetermined, parse_ct_table, parse_labels, select_top_k, standardize,
        synthesize_cohort, Class, CtMatrix, FeatureMatrix, Orientation, SyntheticCohortConfig,
    };
    pub use crate::learn::{
        fit, ClassifierKind, ClassifierSpec, Hyperparameters, TrainedClassifier, TreeEnsemble,
    };
    pub use crate::stats::{
        bh_fdr, classify_regulation, delta_delta_ct, differential_expression, gene_summary,
        pathway_summary, welch_t, DgeRecord, PathwayAnnotation, PathwayCategory, Regulation,
        Thresholds,
    };
}
