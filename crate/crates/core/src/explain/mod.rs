//! SHAP attributions for tree models and the cross-model consensus ranking.

mod treeshap;

use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{csv_field, sig6};
use crate::ingest::FeatureMatrix;
use crate::learn::{Combine, TrainedClassifier};
use crate::stats::{DgeRecord, Regulation};

pub use treeshap::{brute_shap, tree_shap, tree_shap_single, BRUTE_MAX_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSpace {
    Probability,
    Logit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapAttribution {
    pub feature_names: Vec<String>,
    /// Samples × features.
    pub phi: Array2<f64>,
    pub base_value: f64,
    pub space: OutputSpace,
}

impl ShapAttribution {
    /// Header `sample_id,<genes...>`, one row per sample.
    pub fn to_csv(&self, sample_ids: &[String]) -> String {
        let mut out = String::from("sample_id");
        for f in &self.feature_names {
            out.push(',');
            out.push_str(&csv_field(f));
        }
        out.push('\n');
        for (id, row) in sample_ids.iter().zip(self.phi.rows()) {
            out.push_str(&csv_field(id));
            for v in row {
                out.push(',');
                out.push_str(&sig6(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// TreeSHAP of a fitted forest or boosted model on every row of `x`.
///
/// Forests are explained in probability space, boosted models in logit
/// space. A constant (single-class) model gets all-zero attributions.
pub fn explain_classifier(model: &TrainedClassifier, x: &FeatureMatrix) -> Result<ShapAttribution> {
    if !model.kind.is_tree_ensemble() {
        return Err(Error::UnsupportedKind(format!("TreeSHAP for {}", model.kind)));
    }
    if x.feature_names() != model.feature_names.as_slice() {
        return Err(Error::contract("SHAP features differ from the model's"));
    }
    let (s, f) = (x.n_samples(), x.n_features());
    let Some(ensemble) = model.tree_ensemble() else {
        return Ok(ShapAttribution {
            feature_names: model.feature_names.clone(),
            phi: Array2::zeros((s, f)),
            base_value: model.class_prior,
            space: OutputSpace::Probability,
        });
    };
    let rows: Vec<(Vec<f64>, f64)> = (0..s)
        .into_par_iter()
        .map(|i| tree_shap(ensemble, x.values().row(i)))
        .collect::<Result<_>>()?;
    let mut phi = Array2::zeros((s, f));
    for (i, (r, _)) in rows.iter().enumerate() {
        phi.row_mut(i).assign(&ndarray::ArrayView1::from(r));
    }
    Ok(ShapAttribution {
        feature_names: model.feature_names.clone(),
        phi,
        base_value: ensemble.expected_output(),
        space: match ensemble.combine {
            Combine::Average => OutputSpace::Probability,
            Combine::Additive { .. } => OutputSpace::Logit,
        },
    })
}

/// Mean |φ| per feature, descending, ties by name.
pub fn shap_summary(a: &ShapAttribution) -> Vec<(String, f64)> {
    let s = a.phi.nrows().max(1) as f64;
    let mut out: Vec<(String, f64)> = a
        .feature_names
        .iter()
        .zip(a.phi.columns())
        .map(|(g, col)| (g.clone(), col.iter().map(|v| v.abs()).sum::<f64>() / s))
        .collect();
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusRecord {
    pub rank: usize,
    pub gene: String,
    /// Min-max normalised score per source, in source order.
    pub normalized: Vec<f64>,
    pub consensus: f64,
    pub fold_change: Option<f64>,
    pub regulation: Option<Regulation>,
}

/// A named per-gene importance map.
pub type ImportanceSource = (String, BTreeMap<String, f64>);

fn min_max(values: &BTreeMap<String, f64>) -> BTreeMap<&str, f64> {
    let lo = values.values().copied().fold(f64::INFINITY, f64::min);
    let hi = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|(g, v)| {
            let n = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
            (g.as_str(), n)
        })
        .collect()
}

/// Mean of min-max normalised sources, joined with fold change and call.
pub fn consensus_rank(sources: &[ImportanceSource], dge: &[DgeRecord]) -> Result<Vec<ConsensusRecord>> {
    let Some((first_name, first)) = sources.first() else {
        return Err(Error::arg("consensus needs at least one source"));
    };
    for (name, s) in &sources[1..] {
        if !s.keys().eq(first.keys()) {
            return Err(Error::contract(format!(
                "source {name} covers different genes than {first_name}"
            )));
        }
    }
    if let Some((g, _)) = sources.iter().flat_map(|(_, s)| s).find(|(_, v)| !v.is_finite()) {
        return Err(Error::arg(format!("non-finite importance for {g}")));
    }
    let normalized: Vec<BTreeMap<&str, f64>> = sources.iter().map(|(_, s)| min_max(s)).collect();
    let by_gene: BTreeMap<&str, &DgeRecord> = dge.iter().map(|r| (r.gene.as_str(), r)).collect();
    let mut out: Vec<ConsensusRecord> = first
        .keys()
        .map(|g| {
            let scores: Vec<f64> = normalized.iter().map(|n| n[g.as_str()]).collect();
            let dge = by_gene.get(g.as_str());
            ConsensusRecord {
                rank: 0,
                gene: g.clone(),
                consensus: scores.iter().sum::<f64>() / scores.len() as f64,
                normalized: scores,
                fold_change: dge.map(|r| r.fold_change),
                regulation: dge.and_then(|r| r.regulation),
            }
        })
        .collect();
    out.sort_by(|a, b| b.consensus.total_cmp(&a.consensus).then_with(|| a.gene.cmp(&b.gene)));
    for (i, r) in out.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(out)
}

pub const SOURCE_NAMES: [&str; 4] = ["rf_impurity", "gbt_gain", "rf_mean_abs_shap", "gbt_mean_abs_shap"];

fn named(names: &[String], values: impl IntoIterator<Item = f64>) -> BTreeMap<String, f64> {
    names.iter().cloned().zip(values).collect()
}

/// The four standard sources from a fitted forest and boosted model,
/// SHAP values taken over `x`.
pub fn standard_sources(
    forest: &TrainedClassifier,
    boosted: &TrainedClassifier,
    x: &FeatureMatrix,
) -> Result<(Vec<ImportanceSource>, ShapAttribution, ShapAttribution)> {
    let names = x.feature_names();
    let rf_shap = explain_classifier(forest, x)?;
    let gbt_shap = explain_classifier(boosted, x)?;
    let mean_abs = |a: &ShapAttribution| {
        let s = a.phi.nrows().max(1) as f64;
        a.phi
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>() / s)
            .collect::<Vec<_>>()
    };
    let sources = vec![
        (SOURCE_NAMES[0].to_string(), named(names, forest.feature_importance()?)),
        (SOURCE_NAMES[1].to_string(), named(names, boosted.feature_importance()?)),
        (SOURCE_NAMES[2].to_string(), named(names, mean_abs(&rf_shap))),
        (SOURCE_NAMES[3].to_string(), named(names, mean_abs(&gbt_shap))),
    ];
    Ok((sources, rf_shap, gbt_shap))
}

pub fn consensus_csv(source_names: &[String], records: &[ConsensusRecord]) -> String {
    let mut out = String::from("rank,gene,score,fc,direction");
    for s in source_names {
        out.push(',');
        out.push_str(s);
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.rank,
            csv_field(&r.gene),
            sig6(r.consensus),
            r.fold_change.map(sig6).unwrap_or_default(),
            r.regulation.map(|g| g.as_str()).unwrap_or(""),
        ));
        for v in &r.normalized {
            out.push(',');
            out.push_str(&sig6(*v));
        }
        out.push('\n');
    }
    out
}

pub fn summary_csv(summary: &[(String, f64)]) -> String {
    let mut out = String::from("rank,gene,mean_abs_shap\n");
    for (i, (g, v)) in summary.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, csv_field(g), sig6(*v)));
    }
    out
}
