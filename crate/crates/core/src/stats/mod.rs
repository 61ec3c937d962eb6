//! Differential expression: ΔΔCt, Welch's t-test, Benjamini–Hochberg q-values,
//! regulation calls, per-gene summaries and pathway aggregation.

pub mod distributions;
mod pathway;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Class, CtMatrix};

pub use pathway::{pathway_summary, PathwayAnnotation, PathwayCategory, PathwayRow};

/// Result of a two-sample Welch test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample (N − 1) variance.
fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Two-sample Welch t-test with a two-sided p-value.
///
/// When both groups have zero variance the statistic is degenerate: equal
/// means give `t = 0, p = 1`, different means give `t = ±∞, p = 0`; `df` is
/// then reported as `na + nb − 2`.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::arg(format!(
            "Welch test needs at least 2 observations per group (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let diff = mean(a) - mean(b);
    let sa = sample_variance(a) / na;
    let sb = sample_variance(b) / nb;
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if diff == 0.0 {
            WelchTest { t: 0.0, df, p: 1.0 }
        } else {
            WelchTest {
                t: diff.signum() * f64::INFINITY,
                df,
                p: 0.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = distributions::student_t_two_sided(t, df);
    Ok(WelchTest { t, df, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regulation {
    Up,
    Down,
    #[serde(rename = "NS")]
    NotSignificant,
}

impl Regulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Regulation::Up => "UP",
            Regulation::Down => "DOWN",
            Regulation::NotSignificant => "NS",
        }
    }
}

impl std::fmt::Display for Regulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fold-change and significance cut-offs for regulation calls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub fc_up: f64,
    pub fc_down: f64,
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            fc_up: 1.5,
            fc_down: 0.67,
            alpha: 0.05,
        }
    }
}

/// Per-gene differential-expression result. Group 0 is ground control,
/// group 1 is flight; ΔΔCt is flight minus ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgeRecord {
    pub gene: String,
    pub mean_ct_group0: f64,
    pub mean_ct_group1: f64,
    pub sd_ct_group0: f64,
    pub sd_ct_group1: f64,
    pub delta_delta_ct: f64,
    pub fold_change: f64,
    pub log2_fc: f64,
    pub t_stat: f64,
    pub welch_df: f64,
    pub p_value: f64,
    pub q_value: Option<f64>,
    pub regulation: Option<Regulation>,
}

/// ΔΔCt per gene against the all-sample mean, plus a Welch test on the raw Ct groups.
///
/// Records come back in matrix gene order with `q_value` and `regulation` unset.
pub fn delta_delta_ct(m: &CtMatrix) -> Result<Vec<DgeRecord>> {
    let (n0, n1) = m.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::arg("ΔΔCt needs both classes to be non-empty"));
    }
    (0..m.n_genes())
        .into_par_iter()
        .map(|j| {
            let col = m.values().column(j);
            let global = col.mean().unwrap_or(0.0);
            let mut delta0 = Vec::with_capacity(n0);
            let mut delta1 = Vec::with_capacity(n1);
            let mut ct0 = Vec::with_capacity(n0);
            let mut ct1 = Vec::with_capacity(n1);
            for (&ct, &label) in col.iter().zip(m.labels()) {
                match label {
                    Class::GroundControl => {
                        ct0.push(ct);
                        delta0.push(ct - global);
                    }
                    Class::Flight => {
                        ct1.push(ct);
                        delta1.push(ct - global);
                    }
                }
            }
            let ddct = mean(&delta1) - mean(&delta0);
            let sd = |xs: &[f64]| {
                if xs.len() > 1 {
                    sample_variance(xs).sqrt()
                } else {
                    0.0
                }
            };
            let test = if n0 >= 2 && n1 >= 2 {
                welch_t(&ct1, &ct0)?
            } else {
                WelchTest {
                    t: f64::NAN,
                    df: f64::NAN,
                    p: 1.0,
                }
            };
            Ok(DgeRecord {
                gene: m.gene_names()[j].clone(),
                mean_ct_group0: mean(&ct0),
                mean_ct_group1: mean(&ct1),
                sd_ct_group0: sd(&ct0),
                sd_ct_group1: sd(&ct1),
                delta_delta_ct: ddct,
                fold_change: (-ddct).exp2(),
                log2_fc: -ddct,
                t_stat: test.t,
                welch_df: test.df,
                p_value: test.p,
                q_value: None,
                regulation: None,
            })
        })
        .collect()
}

/// Benjamini–Hochberg step-up q-values, returned in input order.
pub fn bh_fdr(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::arg(format!("p-value {bad} outside [0, 1]")));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut q = vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank0, &idx) in order.iter().enumerate().rev() {
        let candidate = p[idx] * (m as f64 / (rank0 + 1) as f64);
        running = running.min(candidate);
        q[idx] = running.min(1.0);
    }
    Ok(q)
}

/// UP iff FC > fc_up and p < alpha; DOWN iff FC < fc_down and p < alpha.
/// Uses the nominal p-value, not q.
pub fn classify_regulation(r: &DgeRecord, th: &Thresholds) -> Regulation {
    if r.p_value < th.alpha {
        if r.fold_change > th.fc_up {
            return Regulation::Up;
        }
        if r.fold_change < th.fc_down {
            return Regulation::Down;
        }
    }
    Regulation::NotSignificant
}

/// Full differential-expression table: ΔΔCt, q-values and regulation calls.
pub fn differential_expression(m: &CtMatrix, th: &Thresholds) -> Result<Vec<DgeRecord>> {
    let mut records = delta_delta_ct(m)?;
    let p: Vec<f64> = records.iter().map(|r| r.p_value).collect();
    let q = bh_fdr(&p)?;
    for (r, q) in records.iter_mut().zip(q) {
        r.q_value = Some(q);
        r.regulation = Some(classify_regulation(r, th));
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl GroupStats {
    fn of(xs: &[f64]) -> Self {
        let sd = if xs.len() > 1 {
            sample_variance(xs).sqrt()
        } else {
            0.0
        };
        Self {
            n: xs.len(),
            mean: mean(xs),
            sd,
        }
    }
}

/// Group statistics behind a single-gene deep dive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSummary {
    pub gene: String,
    pub ground: GroupStats,
    pub flight: GroupStats,
    pub ground_values: Vec<f64>,
    pub flight_values: Vec<f64>,
    pub delta_delta_ct: f64,
    pub fold_change: f64,
    pub p_value: f64,
}

pub fn gene_summary(m: &CtMatrix, gene: &str) -> Result<GeneSummary> {
    let j = m
        .gene_index(gene)
        .ok_or_else(|| Error::UnknownGene(gene.to_string()))?;
    let ground = m.group_column(j, Class::GroundControl);
    let flight = m.group_column(j, Class::Flight);
    if ground.is_empty() || flight.is_empty() {
        return Err(Error::arg("gene summary needs both classes"));
    }
    let g = GroupStats::of(&ground);
    let f = GroupStats::of(&flight);
    let ddct = f.mean - g.mean;
    let p = if ground.len() >= 2 && flight.len() >= 2 {
        welch_t(&flight, &ground)?.p
    } else {
        1.0
    };
    Ok(GeneSummary {
        gene: gene.to_string(),
        ground: g,
        flight: f,
        ground_values: ground,
        flight_values: flight,
        delta_delta_ct: ddct,
        fold_change: (-ddct).exp2(),
        p_value: p,
    })
}
