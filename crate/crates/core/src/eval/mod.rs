//! Leave-one-out cross-validation and binary classification metrics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::ingest::{select_top_k, standardize, Class, CtMatrix, FeatureMatrix};
use crate::learn::{fit, ClassifierKind, ClassifierSpec};

/// Where standardization and top-k selection are fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessPolicy {
    /// Fit once on all samples before the folds are formed.
    #[default]
    PaperFaithful,
    /// Refit inside every training fold; the held-out sample never informs them.
    LeakageSafe,
}

impl FromStr for PreprocessPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "paper_faithful" | "global" => Ok(PreprocessPolicy::PaperFaithful),
            "leakage_safe" | "train_only" => Ok(PreprocessPolicy::LeakageSafe),
            other => Err(Error::arg(format!("unknown preprocessing policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    All,
    TopK(usize),
}

impl FeatureSet {
    pub fn label(self) -> String {
        match self {
            FeatureSet::All => "All genes".into(),
            FeatureSet::TopK(k) => format!("Top-{k}"),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSet::All => f.write_str("all"),
            FeatureSet::TopK(k) => write!(f, "top{k}"),
        }
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "all" {
            return Ok(FeatureSet::All);
        }
        s.strip_prefix("top")
            .map(|k| k.trim_start_matches(['-', '_']))
            .and_then(|k| k.parse().ok())
            .filter(|&k| k > 0)
            .map(FeatureSet::TopK)
            .ok_or_else(|| Error::arg(format!("feature set {s:?} is neither `all` nor `topK`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub sample_id: String,
    pub truth: Class,
    pub predicted: Class,
    pub p_positive: f64,
    /// The training fold held one class only; a constant model was used.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub f1_macro: f64,
    /// F1 with flight as the positive class.
    pub f1_positive: f64,
    pub mcc: f64,
    /// A class was absent from both truth and prediction; its F1 counted as 0.
    pub absent_class: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    /// (fpr, tpr) from (0, 0) to (1, 1), thresholds descending.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub classifier: ClassifierKind,
    pub feature_set: FeatureSet,
    pub policy: PreprocessPolicy,
    pub seed: u64,
    pub folds: Vec<FoldRecord>,
    pub accuracy: f64,
    pub f1_macro: f64,
    pub f1_positive: f64,
    pub mcc: f64,
    /// `None` when the pooled truth holds one class only.
    pub auc: Option<f64>,
    pub roc_points: Vec<(f64, f64)>,
    pub degenerate_folds: usize,
    pub absent_class: bool,
}

fn confusion(truth: &[Class], predicted: &[Class]) -> [f64; 4] {
    let (mut tp, mut tn, mut fp, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for (t, p) in truth.iter().zip(predicted) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => tp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fn_ += 1.0,
        }
    }
    [tp, tn, fp, fn_]
}

pub fn classification_metrics(truth: &[Class], predicted: &[Class]) -> Result<ClassificationMetrics> {
    if truth.len() != predicted.len() {
        return Err(Error::arg(format!(
            "{} truth labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::arg("metrics need at least one prediction"));
    }
    let [tp, tn, fp, fn_] = confusion(truth, predicted);
    let f1 = |hit: f64, miss_a: f64, miss_b: f64| {
        let d = 2.0 * hit + miss_a + miss_b;
        if d == 0.0 { None } else { Some(2.0 * hit / d) }
    };
    let f1_pos = f1(tp, fp, fn_);
    let f1_neg = f1(tn, fn_, fp);
    let marginals = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    Ok(ClassificationMetrics {
        accuracy: (tp + tn) / truth.len() as f64,
        f1_macro: (f1_pos.unwrap_or(0.0) + f1_neg.unwrap_or(0.0)) / 2.0,
        f1_positive: f1_pos.unwrap_or(0.0),
        mcc: if marginals == 0.0 {
            0.0
        } else {
            (tp * tn - fp * fn_) / marginals.sqrt()
        },
        absent_class: f1_pos.is_none() || f1_neg.is_none(),
    })
}

/// Pooled ROC curve; AUC counts concordant pairs plus half the tied ones.
pub fn roc_auc(truth: &[Class], scores: &[f64]) -> Result<RocCurve> {
    if truth.len() != scores.len() {
        return Err(Error::arg(format!(
            "{} truth labels vs {} scores",
            truth.len(),
            scores.len()
        )));
    }
    let pos: Vec<f64> = scores.iter().zip(truth).filter(|(_, t)| t.is_positive()).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(truth).filter(|(_, t)| !t.is_positive()).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedAuc);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::arg("scores must not be NaN"));
    }
    let mut favourable = 0.0;
    for &p in &pos {
        for &n in &neg {
            favourable += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]].is_positive() {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((fp / nn, tp / np));
    }
    Ok(RocCurve {
        auc: favourable / (np * nn),
        points,
    })
}

/// Trapezoidal area under a piecewise-linear ROC curve.
pub fn trapezoid_auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

fn feature_genes(m: &CtMatrix, set: FeatureSet) -> Result<Vec<String>> {
    match set {
        FeatureSet::All => Ok(m.gene_names().to_vec()),
        FeatureSet::TopK(k) => select_top_k(m, k),
    }
}

fn fold_features(
    m: &CtMatrix,
    set: FeatureSet,
    train: &[usize],
    held_out: usize,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let train_ct = m.select_samples(train);
    let genes = feature_genes(&train_ct, set)?;
    let train_ct = train_ct.select_genes(&genes)?;
    let x_train = standardize(&train_ct, None)?;
    let test_ct = m.select_samples(&[held_out]).select_genes(&genes)?;
    let x_test = standardize(&test_ct, Some(x_train.standardization()))?;
    Ok((x_train, x_test))
}

/// Leave-one-out cross-validation of `spec` on an imputed Ct matrix.
///
/// Folds run in parallel; the report lists folds by sample id and does not
/// depend on the number of threads.
pub fn loocv(
    spec: &ClassifierSpec,
    m: &CtMatrix,
    features: FeatureSet,
    policy: PreprocessPolicy,
) -> Result<CvReport> {
    let s = m.n_samples();
    if s < 2 {
        return Err(Error::arg(format!("LOO-CV needs at least 2 samples, got {s}")));
    }
    if m.has_unimputed() {
        return Err(Error::arg("LOO-CV requires an imputed matrix"));
    }
    spec.validate()?;
    let global = match policy {
        PreprocessPolicy::PaperFaithful => {
            let x = standardize(m, None)?;
            Some(x.select_features(&feature_genes(m, features)?)?)
        }
        PreprocessPolicy::LeakageSafe => None,
    };
    let labels = m.labels();

    let mut folds = (0..s)
        .into_par_iter()
        .map(|i| -> Result<FoldRecord> {
            let train: Vec<usize> = (0..s).filter(|&j| j != i).collect();
            let (x_train, x_test) = match &global {
                Some(x) => (x.select_rows(&train), x.select_rows(&[i])),
                None => fold_features(m, features, &train, i)?,
            };
            let y: Vec<Class> = train.iter().map(|&j| labels[j]).collect();
            let model = fit(spec, &x_train, &y)?;
            let p = model.predict_proba(&x_test)?[[0, 1]];
            Ok(FoldRecord {
                sample_id: m.sample_ids()[i].clone(),
                truth: labels[i],
                predicted: if p > 0.5 { Class::Flight } else { Class::GroundControl },
                p_positive: p,
                degenerate: model.is_degenerate(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    folds.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    let truth: Vec<Class> = folds.iter().map(|f| f.truth).collect();
    let predicted: Vec<Class> = folds.iter().map(|f| f.predicted).collect();
    let scores: Vec<f64> = folds.iter().map(|f| f.p_positive).collect();
    let metrics = classification_metrics(&truth, &predicted)?;
    let roc = match roc_auc(&truth, &scores) {
        Ok(r) => Some(r),
        Err(Error::UndefinedAuc) => None,
        Err(e) => return Err(e),
    };
    Ok(CvReport {
        classifier: spec.kind,
        feature_set: features,
        policy,
        seed: spec.seed,
        degenerate_folds: folds.iter().filter(|f| f.degenerate).count(),
        folds,
        accuracy: metrics.accuracy,
        f1_macro: metrics.f1_macro,
        f1_positive: metrics.f1_positive,
        mcc: metrics.mcc,
        auc: roc.as_ref().map(|r| r.auc),
        roc_points: roc.map(|r| r.points).unwrap_or_default(),
        absent_class: metrics.absent_class,
    })
}

/// Model × feature-set metric grid, one row per report.
pub fn grid_csv(reports: &[CvReport]) -> String {
    let mut out = String::from("model,features,accuracy,f1_macro,f1_positive,auc,mcc,degenerate_folds\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.classifier.display_name(),
            r.feature_set.label(),
            sig6(r.accuracy),
            sig6(r.f1_macro),
            sig6(r.f1_positive),
            r.auc.map(sig6).unwrap_or_default(),
            sig6(r.mcc),
            r.degenerate_folds,
        ));
    }
    out
}

/// Long-format ROC points of every report.
pub fn roc_csv(reports: &[CvReport]) -> String {
    let mut out = String::from("model,features,fpr,tpr\n");
    for r in reports {
        for (fpr, tpr) in &r.roc_points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.classifier.key(),
                r.feature_set,
                sig6(*fpr),
                sig6(*tpr)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn cls(v: &[usize]) -> Vec<Class> {
        v.iter().map(|&i| Class::from_index(i).unwrap()).collect()
    }

    #[test]
    fn hand_confusion_matrix() {
        let truth = cls(&[1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        let pred = cls(&[1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        let m = classification_metrics(&truth, &pred).unwrap();
        assert_eq!(m.accuracy, 0.875);
        assert_eq!(m.mcc, 0.75);
        assert_eq!(m.f1_macro, 0.875);
    }

    #[test]
    fn zero_marginal_mcc() {
        let truth = cls(&[0, 0, 1, 1]);
        let m = classification_metrics(&truth, &cls(&[0, 0, 0, 0])).unwrap();
        assert_eq!(m.mcc, 0.0);
        assert_eq!(m.accuracy, 0.5);
        let m = classification_metrics(&cls(&[0, 0]), &cls(&[0, 0])).unwrap();
        assert!(m.absent_class);
        assert_eq!(m.f1_macro, 0.5);
        assert!(classification_metrics(&truth, &cls(&[0])).is_err());
    }

    #[test]
    fn auc_examples() {
        let r = roc_auc(&cls(&[0, 0, 1, 1]), &[0.1, 0.4, 0.35, 0.8]).unwrap();
        assert_eq!(r.auc, 0.75);
        assert_eq!(trapezoid_auc(&r.points), 0.75);
        let r = roc_auc(&cls(&[0, 1, 0, 1]), &[0.5; 4]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(roc_auc(&cls(&[1, 1]), &[0.2, 0.3]), Err(Error::UndefinedAuc)));
    }

    #[test]
    fn feature_set_parsing() {
        assert_eq!("top20".parse::<FeatureSet>().unwrap(), FeatureSet::TopK(20));
        assert_eq!("Top-5".parse::<FeatureSet>().unwrap(), FeatureSet::TopK(5));
        assert_eq!("all".parse::<FeatureSet>().unwrap(), FeatureSet::All);
        assert!("top0".parse::<FeatureSet>().is_err());
        let json = serde_json::to_string(&FeatureSet::TopK(20)).unwrap();
        assert_eq!(json, r#"{"top_k":20}"#);
    }

    fn separable() -> CtMatrix {
        let mut v = Array2::zeros((8, 2));
        for i in 0..8 {
            v[[i, 0]] = if i < 4 { 20.0 + i as f64 * 0.1 } else { 30.0 + i as f64 * 0.1 };
            v[[i, 1]] = (i * 7 % 5) as f64;
        }
        let labels = (0..8).map(|i| if i < 4 { Class::GroundControl } else { Class::Flight }).collect();
        CtMatrix::new(
            (0..8).map(|i| format!("s{i}")).collect(),
            vec!["a".into(), "b".into()],
            v,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn knn_one_neighbour_on_separable_data() {
        let mut spec = ClassifierSpec::new(ClassifierKind::Knn, 0);
        spec.hyperparameters.knn.k = 1;
        for policy in [PreprocessPolicy::PaperFaithful, PreprocessPolicy::LeakageSafe] {
            let r = loocv(&spec, &separable(), FeatureSet::TopK(1), policy).unwrap();
            assert_eq!(r.folds.len(), 8);
            assert_eq!(r.accuracy, 1.0);
            assert_eq!(r.auc, Some(1.0));
        }
    }

    #[test]
    fn single_class_folds_are_flagged() {
        let m = separable().select_samples(&[0, 1, 2, 4]);
        let r = loocv(&ClassifierSpec::new(ClassifierKind::Knn, 0), &m, FeatureSet::All, PreprocessPolicy::PaperFaithful)
            .unwrap();
        assert_eq!(r.degenerate_folds, 1);
        assert!(r.folds.iter().find(|f| f.sample_id == "s4").unwrap().degenerate);
    }
}
