//! Seven classifiers behind one fit / predict-probability contract.
//!
//! Every model is deterministic for a fixed [`ClassifierSpec::seed`], and
//! [`TrainedClassifier`] is immutable after fitting. Probabilities are for
//! the flight class (1); prediction is class 1 only when p(1) > 0.5.

mod boosting;
mod forest;
mod knn;
pub mod logistic;
pub mod net;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Class, FeatureMatrix};

pub use boosting::{logistic_loss, BoostingParams};
pub use forest::ForestParams;
pub use knn::{KnnModel, KnnParams};
pub use logistic::{LogisticModel, LogisticParams};
pub use net::{NetModel, NetParams};
pub use svm::{Kernel, SvmModel, SvmParams};
pub use tree::{Combine, Node, TreeEnsemble};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    RandomForest,
    GradientBoostedTrees,
    SvmRbf,
    SvmLinear,
    LogisticRegression,
    Knn,
    FeedforwardNet,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::RandomForest,
        ClassifierKind::GradientBoostedTrees,
        ClassifierKind::SvmRbf,
        ClassifierKind::SvmLinear,
        ClassifierKind::LogisticRegression,
        ClassifierKind::Knn,
        ClassifierKind::FeedforwardNet,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::GradientBoostedTrees => "gradient_boosted_trees",
            ClassifierKind::SvmRbf => "svm_rbf",
            ClassifierKind::SvmLinear => "svm_linear",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::Knn => "knn",
            ClassifierKind::FeedforwardNet => "feedforward_net",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "Random Forest",
            ClassifierKind::GradientBoostedTrees => "Gradient Boosting",
            ClassifierKind::SvmRbf => "SVM (RBF)",
            ClassifierKind::SvmLinear => "SVM (Linear)",
            ClassifierKind::LogisticRegression => "Logistic Regression",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::FeedforwardNet => "Neural Network",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            ClassifierKind::RandomForest | ClassifierKind::FeedforwardNet
        )
    }

    pub fn is_tree_ensemble(self) -> bool {
        matches!(
            self,
            ClassifierKind::RandomForest | ClassifierKind::GradientBoostedTrees
        )
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.key() == norm)
            .or(match norm.as_str() {
                "rf" => Some(ClassifierKind::RandomForest),
                "gbt" | "gradient_boosting" => Some(ClassifierKind::GradientBoostedTrees),
                "logreg" => Some(ClassifierKind::LogisticRegression),
                "nn" | "net" => Some(ClassifierKind::FeedforwardNet),
                _ => None,
            })
            .ok_or_else(|| Error::arg(format!("unknown classifier kind {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub forest: ForestParams,
    pub boosting: BoostingParams,
    pub logistic: LogisticParams,
    pub knn: KnnParams,
    pub svm: SvmParams,
    pub net: NetParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            kind,
            hyperparameters: Hyperparameters::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyperparameters;
        let bad = |what: &str| Err(Error::arg(format!("{}: {what}", self.kind)));
        match self.kind {
            ClassifierKind::RandomForest => {
                if h.forest.n_trees == 0 || h.forest.min_samples_leaf == 0 {
                    return bad("n_trees and min_samples_leaf must be ≥ 1");
                }
                if h.forest.max_features == Some(0) || h.forest.max_depth == Some(0) {
                    return bad("max_features and max_depth must be ≥ 1");
                }
            }
            ClassifierKind::GradientBoostedTrees => {
                if h.boosting.max_depth == 0 || h.boosting.min_samples_leaf == 0 {
                    return bad("max_depth and min_samples_leaf must be ≥ 1");
                }
                if !(h.boosting.learning_rate > 0.0) {
                    return bad("learning_rate must be positive");
                }
            }
            ClassifierKind::LogisticRegression => {
                if !(h.logistic.l2 > 0.0) || !(h.logistic.tol > 0.0) {
                    return bad("l2 and tol must be positive");
                }
            }
            ClassifierKind::Knn => {
                if h.knn.k == 0 {
                    return bad("k must be ≥ 1");
                }
            }
            ClassifierKind::SvmLinear | ClassifierKind::SvmRbf => {
                if !(h.svm.c > 0.0) || !(h.svm.tol > 0.0) || h.svm.gamma.is_some_and(|g| !(g > 0.0)) {
                    return bad("C, tol and gamma must be positive");
                }
            }
            ClassifierKind::FeedforwardNet => {
                if h.net.hidden.contains(&0) || h.net.epochs == 0 {
                    return bad("hidden sizes and epochs must be ≥ 1");
                }
                if !(0.0..1.0).contains(&h.net.dropout) || !(h.net.learning_rate > 0.0) {
                    return bad("dropout must be in [0, 1) and learning_rate positive");
                }
            }
        }
        Ok(())
    }
}

/// Fitted parameters of each kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    /// Single-class training data: that class with probability 1.
    Constant { p_positive: f64 },
    Forest { ensemble: TreeEnsemble },
    Boosted {
        ensemble: TreeEnsemble,
        stage_losses: Vec<f64>,
    },
    Logistic(LogisticModel),
    Knn(KnnModel),
    Svm(SvmModel),
    Net(NetModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub kind: ClassifierKind,
    pub feature_names: Vec<String>,
    /// Fraction of flight samples in the training set.
    pub class_prior: f64,
    pub model: Model,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    classifier: TrainedClassifier,
}

impl TrainedClassifier {
    pub fn is_degenerate(&self) -> bool {
        matches!(self.model, Model::Constant { .. })
    }

    pub fn tree_ensemble(&self) -> Option<&TreeEnsemble> {
        match &self.model {
            Model::Forest { ensemble } | Model::Boosted { ensemble, .. } => Some(ensemble),
            _ => None,
        }
    }

    /// p(flight) for one feature row.
    pub fn positive_probability(&self, x: ArrayView1<'_, f64>) -> f64 {
        let p = match &self.model {
            Model::Constant { p_positive } => *p_positive,
            Model::Forest { ensemble } => ensemble.output(x),
            Model::Boosted { ensemble, .. } => sigmoid(ensemble.output(x)),
            Model::Logistic(m) => sigmoid(m.decision(x)),
            Model::Knn(m) => m.positive_fraction(x),
            Model::Svm(m) => m.probability(x),
            Model::Net(m) => sigmoid(m.decision(x)),
        };
        p.clamp(0.0, 1.0)
    }

    fn check_features(&self, x: &FeatureMatrix) -> Result<()> {
        if x.feature_names() != self.feature_names.as_slice() {
            return Err(Error::contract(format!(
                "features differ from training ({} vs {} columns)",
                x.n_features(),
                self.feature_names.len()
            )));
        }
        Ok(())
    }

    /// S × 2 matrix of [p(ground), p(flight)].
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Array2<f64>> {
        self.check_features(x)?;
        let mut out = Array2::zeros((x.n_samples(), 2));
        for (i, row) in x.values().rows().into_iter().enumerate() {
            let p = self.positive_probability(row);
            out[[i, 0]] = 1.0 - p;
            out[[i, 1]] = p;
        }
        Ok(out)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<Class>> {
        Ok(self
            .predict_proba(x)?
            .rows()
            .into_iter()
            .map(|r| if r[1] > r[0] { Class::Flight } else { Class::GroundControl })
            .collect())
    }

    /// Normalised impurity (forest) or squared-error gain (boosting) per feature.
    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        match (&self.model, self.kind.is_tree_ensemble()) {
            (Model::Forest { ensemble } | Model::Boosted { ensemble, .. }, _) => {
                Ok(ensemble.gain_importance())
            }
            (Model::Constant { .. }, true) => Ok(vec![0.0; self.feature_names.len()]),
            _ => Err(Error::UnsupportedKind(format!(
                "feature importance for {}",
                self.kind
            ))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            classifier: self.clone(),
        })?)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(raw)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::contract(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Ok(doc.classifier)
    }
}

/// Fits `spec` on features `x` and labels `y`.
///
/// A single-class `y` yields a constant model predicting that class with
/// probability 1.
pub fn fit(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[Class]) -> Result<TrainedClassifier> {
    spec.validate()?;
    if y.len() != x.n_samples() {
        return Err(Error::arg(format!(
            "{} labels for {} samples",
            y.len(),
            x.n_samples()
        )));
    }
    if y.is_empty() {
        return Err(Error::arg("cannot fit on zero samples"));
    }
    if x.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("features must be finite"));
    }
    let y01: Vec<f64> = y.iter().map(|c| c.index() as f64).collect();
    let prior = y01.iter().sum::<f64>() / y01.len() as f64;
    let h = &spec.hyperparameters;
    let xv = x.values();
    let model = if prior == 0.0 || prior == 1.0 {
        Model::Constant { p_positive: prior }
    } else {
        match spec.kind {
            ClassifierKind::RandomForest => Model::Forest {
                ensemble: forest::fit_forest(xv, &y01, &h.forest, spec.seed),
            },
            ClassifierKind::GradientBoostedTrees => {
                let fit = boosting::fit_boosting(xv, &y01, &h.boosting);
                Model::Boosted {
                    ensemble: fit.ensemble,
                    stage_losses: fit.stage_losses,
                }
            }
            ClassifierKind::LogisticRegression => {
                Model::Logistic(logistic::fit_logistic(xv, &y01, &h.logistic))
            }
            ClassifierKind::Knn => Model::Knn(KnnModel {
                k: h.knn.k,
                x: xv.clone(),
                y: y01,
            }),
            ClassifierKind::SvmLinear => {
                Model::Svm(svm::fit_svm(xv, &y01, Kernel::Linear, &h.svm))
            }
            ClassifierKind::SvmRbf => {
                let gamma = h.svm.gamma.unwrap_or_else(|| svm::scale_gamma(xv));
                Model::Svm(svm::fit_svm(xv, &y01, Kernel::Rbf { gamma }, &h.svm))
            }
            ClassifierKind::FeedforwardNet => {
                let yi: Vec<usize> = y.iter().map(|c| c.index()).collect();
                Model::Net(net::fit_net(xv, &yi, &h.net, spec.seed))
            }
        }
    };
    Ok(TrainedClassifier {
        kind: spec.kind,
        feature_names: x.feature_names().to_vec(),
        class_prior: prior,
        model,
    })
}
