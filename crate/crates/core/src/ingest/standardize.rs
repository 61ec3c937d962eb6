use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::CtMatrix;
use crate::error::{Error, Result};

/// Standard deviations below this are treated as zero; the column maps to 0.
pub const SD_FLOOR: f64 = 1e-12;

/// Per-feature mean and population standard deviation used for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    pub fn fit(values: &Array2<f64>, feature_names: &[String]) -> Self {
        let n = values.nrows().max(1) as f64;
        let means: Array1<f64> = values.sum_axis(Axis(0)) / n;
        let sds = values
            .axis_iter(Axis(1))
            .zip(means.iter())
            .map(|(col, &m)| (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Self {
            feature_names: feature_names.to_vec(),
            means: means.to_vec(),
            sds,
        }
    }

    /// Statistics that leave values unchanged.
    pub fn identity(feature_names: &[String]) -> Self {
        Self {
            feature_names: feature_names.to_vec(),
            means: vec![0.0; feature_names.len()],
            sds: vec![1.0; feature_names.len()],
        }
    }

    pub fn apply(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, sd) = (self.means[j], self.sds[j]);
            if sd < SD_FLOOR {
                col.fill(0.0);
            } else {
                col.mapv_inplace(|v| (v - m) / sd);
            }
        }
        out
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            feature_names: idx.iter().map(|&j| self.feature_names[j].clone()).collect(),
            means: idx.iter().map(|&j| self.means[j]).collect(),
            sds: idx.iter().map(|&j| self.sds[j]).collect(),
        }
    }
}

/// Samples × features matrix handed to the classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
    feature_names: Vec<String>,
    standardization: Standardization,
}

impl FeatureMatrix {
    /// Wraps already-prepared features; the recorded standardization is the identity.
    pub fn from_raw(values: Array2<f64>, feature_names: Vec<String>) -> Result<Self> {
        if values.ncols() != feature_names.len() {
            return Err(Error::arg(format!(
                "{} columns but {} feature names",
                values.ncols(),
                feature_names.len()
            )));
        }
        let standardization = Standardization::identity(&feature_names);
        Ok(Self {
            values,
            feature_names,
            standardization,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.clone(),
        }
    }

    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n.as_ref())
                    .ok_or_else(|| Error::UnknownGene(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            values: self.values.select(Axis(1), &idx),
            feature_names: idx.iter().map(|&j| self.feature_names[j].clone()).collect(),
            standardization: self.standardization.subset(&idx),
        })
    }
}

/// Z-scores every gene column of an imputed matrix.
///
/// Without `fitted`, means and population SDs are fit on `m` itself; with
/// `fitted`, those statistics are applied verbatim (held-out transforms).
/// Columns whose SD is below [`SD_FLOOR`] become all zeros.
pub fn standardize(m: &CtMatrix, fitted: Option<&Standardization>) -> Result<FeatureMatrix> {
    if m.has_unimputed() {
        return Err(Error::arg("standardize requires an imputed matrix"));
    }
    let standardization = match fitted {
        Some(s) => {
            if s.feature_names != m.gene_names() {
                return Err(Error::contract(
                    "fitted standardization covers different genes",
                ));
            }
            s.clone()
        }
        None => Standardization::fit(m.values(), m.gene_names()),
    };
    Ok(FeatureMatrix {
        values: standardization.apply(m.values()),
        feature_names: m.gene_names().to_vec(),
        standardization,
    })
}
