use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DgeRecord;
use crate::error::{Error, Result};

const REFERENCE_ANNOTATION: &str = include_str!("../../data/pathway_reference.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PathwayCategory {
    Thermogenesis,
    Adipogenesis,
    TranscriptionRegulation,
    Signaling,
    Metabolism,
    Other,
}

impl PathwayCategory {
    pub const ALL: [PathwayCategory; 6] = [
        PathwayCategory::Thermogenesis,
        PathwayCategory::Adipogenesis,
        PathwayCategory::TranscriptionRegulation,
        PathwayCategory::Signaling,
        PathwayCategory::Metabolism,
        PathwayCategory::Other,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            PathwayCategory::Thermogenesis => "Thermogenesis",
            PathwayCategory::Adipogenesis => "Adipogenesis",
            PathwayCategory::TranscriptionRegulation => "Transcription Regulation",
            PathwayCategory::Signaling => "Signaling",
            PathwayCategory::Metabolism => "Metabolism",
            PathwayCategory::Other => "Other",
        }
    }
}

impl FromStr for PathwayCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "thermogenesis" => PathwayCategory::Thermogenesis,
            "adipogenesis" => PathwayCategory::Adipogenesis,
            "transcriptionregulation" => PathwayCategory::TranscriptionRegulation,
            "signaling" | "signalling" => PathwayCategory::Signaling,
            "metabolism" => PathwayCategory::Metabolism,
            "other" => PathwayCategory::Other,
            _ => return Err(Error::arg(format!("unknown pathway category {s:?}"))),
        })
    }
}

/// Gene → pathway category mapping. Genes without an entry count as `Other`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathwayAnnotation {
    map: BTreeMap<String, PathwayCategory>,
}

impl PathwayAnnotation {
    /// Parses `gene,category` CSV. A header row and `#` comment lines are skipped.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut seen_data = false;
        for (row, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 2 columns, found {}", fields.len()),
                });
            }
            let category = match fields[1].parse::<PathwayCategory>() {
                Ok(c) => c,
                Err(_) if !seen_data && fields[1].eq_ignore_ascii_case("category") => {
                    seen_data = true;
                    continue;
                }
                Err(e) => return Err(e),
            };
            seen_data = true;
            if let Some(prev) = map.insert(fields[0].to_string(), category) {
                if prev != category {
                    return Err(Error::Parse {
                        row,
                        message: format!("gene {} mapped to two categories", fields[0]),
                    });
                }
            }
        }
        Ok(Self { map })
    }

    /// Reference annotation for the 89-probe adipogenesis/thermogenesis panel.
    pub fn reference() -> Self {
        Self::parse(REFERENCE_ANNOTATION).expect("bundled annotation is valid")
    }

    pub fn category(&self, gene: &str) -> PathwayCategory {
        self.map
            .get(gene)
            .copied()
            .unwrap_or(PathwayCategory::Other)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn insert(&mut self, gene: impl Into<String>, category: PathwayCategory) {
        self.map.insert(gene.into(), category);
    }
}

impl FromIterator<(String, PathwayCategory)> for PathwayAnnotation {
    fn from_iter<I: IntoIterator<Item = (String, PathwayCategory)>>(iter: I) -> Self {
        Self {
            map: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayRow {
    pub pathway: PathwayCategory,
    pub gene_count: usize,
    pub mean_fc: f64,
    pub max_fc: f64,
    pub min_p: f64,
    pub mean_log2_fc: f64,
}

/// Descriptive per-category aggregates; empty categories are omitted.
pub fn pathway_summary(records: &[DgeRecord], ann: &PathwayAnnotation) -> Vec<PathwayRow> {
    let mut groups: BTreeMap<PathwayCategory, Vec<&DgeRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(ann.category(&r.gene)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(pathway, members)| {
            let n = members.len() as f64;
            PathwayRow {
                pathway,
                gene_count: members.len(),
                mean_fc: members.iter().map(|r| r.fold_change).sum::<f64>() / n,
                max_fc: members
                    .iter()
                    .map(|r| r.fold_change)
                    .fold(f64::NEG_INFINITY, f64::max),
                min_p: members
                    .iter()
                    .map(|r| r.p_value)
                    .fold(f64::INFINITY, f64::min),
                mean_log2_fc: members.iter().map(|r| r.log2_fc).sum::<f64>() / n,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(gene: &str, fc: f64, p: f64) -> DgeRecord {
        DgeRecord {
            gene: gene.into(),
            mean_ct_group0: 0.0,
            mean_ct_group1: 0.0,
            sd_ct_group0: 0.0,
            sd_ct_group1: 0.0,
            delta_delta_ct: -fc.log2(),
            fold_change: fc,
            log2_fc: fc.log2(),
            t_stat: 0.0,
            welch_df: 1.0,
            p_value: p,
            q_value: None,
            regulation: None,
        }
    }

    #[test]
    fn reference_sizes() {
        let ann = PathwayAnnotation::reference();
        assert_eq!(ann.len(), 89);
        let mut counts = BTreeMap::new();
        for c in ann.map.values() {
            *counts.entry(*c).or_insert(0) += 1;
        }
        assert_eq!(counts[&PathwayCategory::Thermogenesis], 5);
        assert_eq!(counts[&PathwayCategory::Signaling], 12);
        assert_eq!(counts[&PathwayCategory::TranscriptionRegulation], 18);
        assert_eq!(counts[&PathwayCategory::Adipogenesis], 20);
        assert_eq!(counts[&PathwayCategory::Metabolism], 15);
        assert_eq!(counts[&PathwayCategory::Other], 19);
    }

    #[test]
    fn two_gene_aggregate() {
        let mut ann = PathwayAnnotation::default();
        ann.insert("a", PathwayCategory::Signaling);
        ann.insert("b", PathwayCategory::Signaling);
        let rows = pathway_summary(&[rec("a", 2.0, 0.2), rec("b", 4.0, 0.03)], &ann);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.gene_count, 2);
        assert!((r.mean_fc - 3.0).abs() < 1e-12);
        assert_eq!(r.max_fc, 4.0);
        assert!((r.mean_log2_fc - 1.5).abs() < 1e-12);
        assert_eq!(r.min_p, 0.03);
    }

    #[test]
    fn single_gene_and_unannotated() {
        let mut ann = PathwayAnnotation::default();
        ann.insert("t", PathwayCategory::Thermogenesis);
        let rows = pathway_summary(&[rec("t", 12.21, 0.0167), rec("x", 0.5, 0.5)], &ann);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].pathway, PathwayCategory::Thermogenesis);
        assert_eq!(rows[0].mean_fc, rows[0].max_fc);
        assert_eq!(rows[1].pathway, PathwayCategory::Other);
    }

    #[test]
    fn parse_rejects_conflicts_and_bad_categories() {
        assert!(PathwayAnnotation::parse("g,Thermogenesis\ng,Other\n").is_err());
        assert!(PathwayAnnotation::parse("gene,category\ng,Plumbing\n").is_err());
        let ann = PathwayAnnotation::parse("gene,category\ng,transcription regulation\n").unwrap();
        assert_eq!(ann.category("g"), PathwayCategory::TranscriptionRegulation);
    }
}
