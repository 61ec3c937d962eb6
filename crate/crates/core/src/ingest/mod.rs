//! Parsing, validation, imputation, standardization and synthesis of Ct matrices.

mod standardize;
mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::welch_t;

pub use standardize::{standardize, FeatureMatrix, Standardization, SD_FLOOR};
pub use synth::{signal_gene_names, synthesize_cohort, SyntheticCohortConfig};

/// Ct assigned to undetermined / missing reactions.
pub const IMPUTED_CT: f64 = 40.0;

/// Sample class. Ground control is the reference (0), flight the positive class (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Class {
    GroundControl = 0,
    Flight = 1,
}

impl Class {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Class::GroundControl),
            1 => Some(Class::Flight),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Class::Flight
    }
}

impl From<Class> for u8 {
    fn from(c: Class) -> u8 {
        c as u8
    }
}

impl TryFrom<u8> for Class {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Class::from_index(v as usize).ok_or_else(|| format!("class label {v} is not 0 or 1"))
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "ground" | "ground control" | "ground_control" => Ok(Class::GroundControl),
            "1" | "flight" => Ok(Class::Flight),
            other => Err(Error::Label(format!("unrecognised label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    GenesAsRows,
    SamplesAsRows,
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "genes_as_rows" => Ok(Orientation::GenesAsRows),
            "samples_as_rows" => Ok(Orientation::SamplesAsRows),
            _ => Err(Error::arg(format!("unknown orientation {s:?}"))),
        }
    }
}

/// Samples × genes table of Ct values with labels.
///
/// Missing cells hold `NaN` until imputed; `missing_mask` keeps recording
/// which cells were originally undetermined after imputation.
#[derive(Debug, Clone)]
pub struct CtMatrix {
    sample_ids: Vec<String>,
    gene_names: Vec<String>,
    values: Array2<f64>,
    labels: Vec<Class>,
    missing_mask: Array2<bool>,
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::arg(format!("duplicate {what} {n:?}")));
        }
    }
    Ok(())
}

impl CtMatrix {
    /// Builds a matrix; `NaN` cells are marked missing.
    pub fn new(
        sample_ids: Vec<String>,
        gene_names: Vec<String>,
        values: Array2<f64>,
        labels: Vec<Class>,
    ) -> Result<Self> {
        let mask = values.mapv(f64::is_nan);
        Self::with_mask(sample_ids, gene_names, values, labels, mask)
    }

    pub fn with_mask(
        sample_ids: Vec<String>,
        gene_names: Vec<String>,
        values: Array2<f64>,
        labels: Vec<Class>,
        missing_mask: Array2<bool>,
    ) -> Result<Self> {
        let (s, g) = values.dim();
        if s != sample_ids.len() || s != labels.len() {
            return Err(Error::arg(format!(
                "{s} rows but {} sample ids and {} labels",
                sample_ids.len(),
                labels.len()
            )));
        }
        if g != gene_names.len() {
            return Err(Error::arg(format!(
                "{g} columns but {} gene names",
                gene_names.len()
            )));
        }
        if missing_mask.dim() != (s, g) {
            return Err(Error::arg("missing mask shape differs from values"));
        }
        check_unique(&sample_ids, "sample id")?;
        check_unique(&gene_names, "gene name")?;
        Ok(Self {
            sample_ids,
            gene_names,
            values,
            labels,
            missing_mask,
        })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn missing_mask(&self) -> &Array2<bool> {
        &self.missing_mask
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_genes(&self) -> usize {
        self.gene_names.len()
    }

    /// (ground, flight) sample counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let flight = self.labels.iter().filter(|c| c.is_positive()).count();
        (self.labels.len() - flight, flight)
    }

    pub fn missing_count(&self) -> usize {
        self.missing_mask.iter().filter(|&&m| m).count()
    }

    /// True when some cell still holds `NaN`.
    pub fn has_unimputed(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    pub fn gene_index(&self, gene: &str) -> Option<usize> {
        self.gene_names.iter().position(|g| g == gene)
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    /// Ct values of gene column `j` restricted to one class, in sample order.
    pub fn group_column(&self, j: usize, class: Class) -> Vec<f64> {
        self.values
            .column(j)
            .iter()
            .zip(&self.labels)
            .filter(|(_, &c)| c == class)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Sub-matrix keeping the given sample rows in the given order.
    pub fn select_samples(&self, rows: &[usize]) -> CtMatrix {
        CtMatrix {
            sample_ids: rows.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            gene_names: self.gene_names.clone(),
            values: self.values.select(ndarray::Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            missing_mask: self.missing_mask.select(ndarray::Axis(0), rows),
        }
    }

    /// Sub-matrix keeping the named genes in the given order.
    pub fn select_genes<S: AsRef<str>>(&self, genes: &[S]) -> Result<CtMatrix> {
        let cols = genes
            .iter()
            .map(|g| {
                self.gene_index(g.as_ref())
                    .ok_or_else(|| Error::UnknownGene(g.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CtMatrix {
            sample_ids: self.sample_ids.clone(),
            gene_names: cols.iter().map(|&j| self.gene_names[j].clone()).collect(),
            values: self.values.select(ndarray::Axis(1), &cols),
            labels: self.labels.clone(),
            missing_mask: self.missing_mask.select(ndarray::Axis(1), &cols),
        })
    }

    /// Canonical CSV: header `sample_id,<genes…>`, one row per sample.
    /// Values use the shortest representation that round-trips exactly;
    /// still-missing cells are written as `Undetermined`.
    pub fn to_canonical_csv(&self) -> String {
        let mut out = String::from("sample_id");
        for g in &self.gene_names {
            out.push(',');
            out.push_str(g);
        }
        out.push('\n');
        for (i, id) in self.sample_ids.iter().enumerate() {
            out.push_str(id);
            for v in self.values.row(i) {
                if v.is_nan() {
                    out.push_str(",Undetermined");
                } else {
                    let _ = write!(out, ",{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Two-column `sample_id,label` CSV with labels 0/1.
    pub fn labels_csv(&self) -> String {
        let mut out = String::from("sample_id,label\n");
        for (id, c) in self.sample_ids.iter().zip(&self.labels) {
            let _ = writeln!(out, "{id},{}", c.index());
        }
        out
    }
}

fn is_missing_token(tok: &str) -> bool {
    tok.is_empty() || tok == "NA" || tok.eq_ignore_ascii_case("undetermined")
}

fn parse_ct_token(tok: &str) -> Option<f64> {
    if tok.contains(',') {
        return None;
    }
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn detect_delimiter(raw: &str) -> u8 {
    let header = raw.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn read_records(raw: &str) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(raw))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());
    let mut rows = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

/// Parses a delimited Ct table (comma or tab, detected from the header row).
///
/// The first column holds gene names (`GenesAsRows`) or sample ids
/// (`SamplesAsRows`). Empty cells, `NA` and `Undetermined` (any case) are
/// marked missing and stored as `NaN`. Cell-error coordinates refer to the
/// raw table: `row` counts records from the header (0), `col` counts fields
/// from the identifier column (0).
pub fn parse_ct_table(
    raw: &str,
    orientation: Orientation,
    label_map: &BTreeMap<String, Class>,
) -> Result<CtMatrix> {
    let rows = read_records(raw)?;
    let (header, body) = rows.split_first().ok_or(Error::Parse {
        row: 0,
        message: "empty table".into(),
    })?;
    let width = header.len();
    if width < 2 {
        return Err(Error::Parse {
            row: 0,
            message: "header needs an identifier column and at least one data column".into(),
        });
    }
    if body.is_empty() {
        return Err(Error::Parse {
            row: 1,
            message: "table has no data rows".into(),
        });
    }
    let mut row_ids = Vec::with_capacity(body.len());
    let mut cells = Array2::<f64>::from_elem((body.len(), width - 1), f64::NAN);
    for (r, rec) in body.iter().enumerate() {
        let raw_row = r + 1;
        if rec.len() != width {
            return Err(Error::Parse {
                row: raw_row,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        row_ids.push(rec[0].clone());
        for (c, tok) in rec.iter().enumerate().skip(1) {
            if is_missing_token(tok) {
                continue;
            }
            cells[[r, c - 1]] = parse_ct_token(tok).ok_or_else(|| Error::Cell {
                row: raw_row,
                col: c,
                token: tok.clone(),
            })?;
        }
    }
    let col_ids: Vec<String> = header[1..].to_vec();
    let (sample_ids, gene_names, values) = match orientation {
        Orientation::SamplesAsRows => (row_ids, col_ids, cells),
        Orientation::GenesAsRows => (col_ids, row_ids, cells.reversed_axes().as_standard_layout().to_owned()),
    };
    let labels = sample_ids
        .iter()
        .map(|id| {
            label_map
                .get(id)
                .copied()
                .ok_or_else(|| Error::Label(format!("sample {id:?} has no label")))
        })
        .collect::<Result<Vec<_>>>()?;
    CtMatrix::new(sample_ids, gene_names, values, labels)
}

/// Parses a `sample_id,label` file. Labels are 0/1 or ground/flight
/// (case-insensitive); a header row is detected and skipped.
pub fn parse_labels(raw: &str) -> Result<BTreeMap<String, Class>> {
    let rows = read_records(raw)?;
    let mut map = BTreeMap::new();
    for (i, rec) in rows.iter().enumerate() {
        if rec.len() != 2 {
            return Err(Error::Parse {
                row: i,
                message: format!("label file needs 2 columns, found {}", rec.len()),
            });
        }
        let class = match rec[1].parse::<Class>() {
            Ok(c) => c,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(e),
        };
        if let Some(prev) = map.insert(rec[0].clone(), class) {
            if prev != class {
                return Err(Error::Label(format!("sample {:?} labelled twice", rec[0])));
            }
        }
    }
    if map.is_empty() {
        return Err(Error::Label("label file has no entries".into()));
    }
    Ok(map)
}

/// Replaces every missing cell with [`IMPUTED_CT`]; the mask is preserved.
pub fn impute_undetermined(m: &CtMatrix) -> CtMatrix {
    impute_with(m, IMPUTED_CT)
}

pub fn impute_with(m: &CtMatrix, value: f64) -> CtMatrix {
    let mut out = m.clone();
    out.values
        .zip_mut_with(&m.missing_mask, |v, &missing| {
            if missing || v.is_nan() {
                *v = value;
            }
        });
    out.missing_mask.zip_mut_with(&m.values, |mk, v| *mk |= v.is_nan());
    out
}

/// Gene names ordered by ascending Welch p-value (ties by name); first `k` returned.
pub fn select_top_k(m: &CtMatrix, k: usize) -> Result<Vec<String>> {
    if k > m.n_genes() {
        return Err(Error::arg(format!(
            "k = {k} exceeds the {} available genes",
            m.n_genes()
        )));
    }
    let mut scored = Vec::with_capacity(m.n_genes());
    for j in 0..m.n_genes() {
        let ground = m.group_column(j, Class::GroundControl);
        let flight = m.group_column(j, Class::Flight);
        let p = welch_t(&flight, &ground)?.p;
        scored.push((p, m.gene_names()[j].as_str()));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(_, g)| g.to_string())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(pairs: &[(&str, Class)]) -> BTreeMap<String, Class> {
        pairs.iter().map(|(s, c)| (s.to_string(), *c)).collect()
    }

    #[test]
    fn parses_samples_as_rows() {
        let raw = "sample_id,A,B\ns1,20.5,30\ns2,21,31.25\n";
        let lm = labels(&[("s1", Class::GroundControl), ("s2", Class::Flight)]);
        let m = parse_ct_table(raw, Orientation::SamplesAsRows, &lm).unwrap();
        assert_eq!(m.n_samples(), 2);
        assert_eq!(m.gene_names(), &["A", "B"]);
        assert_eq!(m.values()[[1, 1]], 31.25);
        assert_eq!(m.missing_count(), 0);
        assert_eq!(m.labels(), &[Class::GroundControl, Class::Flight]);
    }

    #[test]
    fn parses_genes_as_rows_tab_delimited() {
        let raw = "gene\ts1\ts2\ts3\nUcp1\t32\t28\tUndetermined\nJun\t25\t26\t27\n";
        let lm = labels(&[
            ("s1", Class::GroundControl),
            ("s2", Class::Flight),
            ("s3", Class::Flight),
        ]);
        let m = parse_ct_table(raw, Orientation::GenesAsRows, &lm).unwrap();
        assert_eq!(m.values().dim(), (3, 2));
        assert_eq!(m.sample_ids(), &["s1", "s2", "s3"]);
        assert_eq!(m.values()[[1, 0]], 28.0);
        assert_eq!(m.values()[[2, 1]], 27.0);
        assert!(m.missing_mask()[[2, 0]]);
        assert_eq!(m.missing_count(), 1);
    }

    #[test]
    fn single_missing_flag() {
        let raw = "id,a,b,c,d\nx,1,2,3,4\ny,5,6,7,undetermined\nz,9,10,11,12\n";
        let lm = labels(&[
            ("x", Class::GroundControl),
            ("y", Class::Flight),
            ("z", Class::Flight),
        ]);
        let m = parse_ct_table(raw, Orientation::SamplesAsRows, &lm).unwrap();
        for ((i, j), &flag) in m.missing_mask().indexed_iter() {
            assert_eq!(flag, (i, j) == (1, 3));
        }
    }

    #[test]
    fn missing_token_variants() {
        let raw = "id,a,b,c,d\nx,Undetermined,NA,,UNDETERMINED\n";
        let lm = labels(&[("x", Class::Flight)]);
        let m = parse_ct_table(raw, Orientation::SamplesAsRows, &lm).unwrap();
        assert_eq!(m.missing_count(), 4);
    }

    #[test]
    fn parse_errors() {
        let lm = labels(&[("x", Class::Flight), ("y", Class::GroundControl)]);
        let ragged = "id,a,b\nx,1,2\ny,3\n";
        assert!(matches!(
            parse_ct_table(ragged, Orientation::SamplesAsRows, &lm),
            Err(Error::Parse { row: 2, .. })
        ));
        let bad = "id,a,b\nx,1,abc\n";
        assert!(matches!(
            parse_ct_table(bad, Orientation::SamplesAsRows, &lm),
            Err(Error::Cell { row: 1, col: 2, .. })
        ));
        let unknown = "id,a\nq,1\n";
        assert!(matches!(
            parse_ct_table(unknown, Orientation::SamplesAsRows, &lm),
            Err(Error::Label(_))
        ));
        let inf = "id,a\nx,inf\n";
        assert!(matches!(
            parse_ct_table(inf, Orientation::SamplesAsRows, &lm),
            Err(Error::Cell { .. })
        ));
        assert!(parse_ct_table("", Orientation::SamplesAsRows, &lm).is_err());
        let dup = "id,a,a\nx,1,2\n";
        assert!(parse_ct_table(dup, Orientation::SamplesAsRows, &lm).is_err());
    }

    #[test]
    fn label_file_variants() {
        let m = parse_labels("sample_id,label\na,Ground\nb,FLIGHT\nc,0\nd,1\n").unwrap();
        assert_eq!(m["a"], Class::GroundControl);
        assert_eq!(m["b"], Class::Flight);
        assert_eq!(m["c"], Class::GroundControl);
        assert_eq!(m["d"], Class::Flight);
        assert!(parse_labels("a,2\n").is_err());
        assert!(parse_labels("a,0\nb,maybe\n").is_err());
        assert!(parse_labels("a,0\na,1\n").is_err());
    }

    #[test]
    fn imputation() {
        let one = CtMatrix::new(
            vec!["s".into()],
            vec!["g".into()],
            Array2::from_elem((1, 1), f64::NAN),
            vec![Class::Flight],
        )
        .unwrap();
        let imputed = impute_undetermined(&one);
        assert_eq!(imputed.values()[[0, 0]], 40.0);
        assert!(imputed.missing_mask()[[0, 0]]);
        assert!(!imputed.has_unimputed());
        // idempotent
        let again = impute_undetermined(&imputed);
        assert_eq!(again.values(), imputed.values());
        assert_eq!(again.missing_mask(), imputed.missing_mask());

        let full = CtMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["g".into(), "h".into()],
            ndarray::array![[21.5, 22.0], [30.125, 19.0]],
            vec![Class::Flight, Class::GroundControl],
        )
        .unwrap();
        let same = impute_undetermined(&full);
        for (x, y) in same.values().iter().zip(full.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn canonical_csv_round_trip() {
        let raw = "gene,s1,s2\nA,20.123456789,Undetermined\nB,0.1,35\n";
        let lm = labels(&[("s1", Class::GroundControl), ("s2", Class::Flight)]);
        let m = parse_ct_table(raw, Orientation::GenesAsRows, &lm).unwrap();
        let csv = m.to_canonical_csv();
        assert!(csv.starts_with("sample_id,A,B\n"));
        let back = parse_ct_table(&csv, Orientation::SamplesAsRows, &lm).unwrap();
        assert_eq!(back.sample_ids(), m.sample_ids());
        assert_eq!(back.missing_mask(), m.missing_mask());
        for (x, y) in back.values().iter().zip(m.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let lab = parse_labels(&m.labels_csv()).unwrap();
        assert_eq!(lab, lm);
    }

    #[test]
    fn top_k_toy() {
        // gene B separates [1,1] vs [9,9]; A and C are identical across groups
        let m = CtMatrix::new(
            (0..4).map(|i| format!("s{i}")).collect(),
            vec!["A".into(), "B".into(), "C".into()],
            ndarray::array![
                [5.0, 1.0, 3.0],
                [6.0, 1.0, 4.0],
                [5.0, 9.0, 3.0],
                [6.0, 9.0, 4.0]
            ],
            vec![
                Class::GroundControl,
                Class::GroundControl,
                Class::Flight,
                Class::Flight,
            ],
        )
        .unwrap();
        assert_eq!(select_top_k(&m, 1).unwrap(), vec!["B"]);
        let all = select_top_k(&m, 3).unwrap();
        // A and C tie at p = 1, broken by name
        assert_eq!(all, vec!["B", "A", "C"]);
        assert!(select_top_k(&m, 4).is_err());
    }
}
