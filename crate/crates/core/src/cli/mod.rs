//! Command-line front end: configuration, pipeline runs and artifact output.
//!
//! Every command computes all of its artifacts in memory first and writes
//! them only when nothing failed, followed by a `manifest.json` listing each
//! file with its SHA-256.

mod config;
pub mod svg;
mod tables;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::decomp::{cluster_purity, correlation_matrix, hcluster, network_edges, pca, Axis};
use crate::error::{Error, Result};
use crate::eval::{grid_csv, loocv, roc_csv, CvReport, FeatureSet, PreprocessPolicy};
use crate::explain::{consensus_csv, consensus_rank, shap_summary, standard_sources, summary_csv};
use crate::ingest::{
    impute_with, parse_ct_table, parse_labels, standardize, synthesize_cohort, Class, CtMatrix,
    Orientation, SyntheticCohortConfig,
};
use crate::learn::{fit, ClassifierKind, ClassifierSpec};
use crate::stats::{differential_expression, gene_summary, pathway_summary, DgeRecord, PathwayAnnotation, Regulation};

pub use config::{Inputs, RunConfig};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "QPCR_XAI_OUT";
pub const DEFAULT_OUT: &str = "qpcr-xai-out";

#[derive(Debug, Parser)]
#[command(name = "qpcr-xai", version, about = "Explainable-ML analysis of small-cohort RT-qPCR Ct tables")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory [default: $QPCR_XAI_OUT, else ./qpcr-xai-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Ct table (CSV or TSV).
    #[arg(long, global = true)]
    pub ct: Option<PathBuf>,
    /// Two-column sample_id,label file.
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Gene,pathway annotation CSV.
    #[arg(long, global = true)]
    pub annotation: Option<PathBuf>,
    /// genes_as_rows or samples_as_rows.
    #[arg(long, global = true)]
    pub orientation: Option<Orientation>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// paper_faithful or leakage_safe.
    #[arg(long, global = true)]
    pub policy: Option<PreprocessPolicy>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert an exported Ct table to the canonical ct.csv + labels.csv.
    Convert {
        /// Exported table (Excel sheets saved as CSV or TSV).
        #[arg(long)]
        input: PathBuf,
        /// Derive labels from FLT / GC tokens in the sample names.
        #[arg(long)]
        infer_labels: bool,
    },
    /// Differential expression table, volcano plot and census.
    Dge,
    /// PCA and sample clustering.
    Pca,
    /// Leave-one-out cross-validation grid.
    Crossval {
        /// Comma-separated classifier kinds.
        #[arg(long, value_delimiter = ',')]
        classifiers: Vec<ClassifierKind>,
        /// Comma-separated feature sets (all, top20, ...).
        #[arg(long, value_delimiter = ',')]
        feature_sets: Vec<FeatureSet>,
    },
    /// TreeSHAP, consensus ranking, correlation network, PCA and pathways.
    Explain,
    /// Pathway-level summary.
    Pathway,
    /// Write a synthetic cohort as ct.csv + labels.csv.
    Synth {
        #[arg(long, default_value_t = 8)]
        n_per_group: usize,
        #[arg(long, default_value_t = 89)]
        genes: usize,
        #[arg(long, default_value_t = 1)]
        signal_genes: usize,
        #[arg(long, default_value_t = 3.61)]
        effect: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
    },
    /// Every analysis into one directory.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Convert { .. } => "convert",
            Command::Dge => "dge",
            Command::Pca => "pca",
            Command::Crossval { .. } => "crossval",
            Command::Explain => "explain",
            Command::Pathway => "pathway",
            Command::Synth { .. } => "synth",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn artifact(name: impl Into<String>, content: String) -> Artifact {
    Artifact {
        name: name.into(),
        bytes: content.into_bytes(),
    }
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Dataset {
    ct: CtMatrix,
    annotation: PathwayAnnotation,
    digests: BTreeMap<String, String>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io { .. } | Error::File { .. } => e,
        other => Error::File {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

fn load_labels(path: &Path) -> Result<BTreeMap<String, Class>> {
    in_file(path, parse_labels(&read(path)?))
}

fn load(cfg: &RunConfig) -> Result<Dataset> {
    let ct_path = cfg
        .inputs
        .ct_table
        .as_deref()
        .ok_or_else(|| Error::arg("no Ct table given (--ct or inputs.ct_table)"))?;
    let labels_path = cfg
        .inputs
        .labels
        .as_deref()
        .ok_or_else(|| Error::arg("no label file given (--labels or inputs.labels)"))?;
    let raw = read(ct_path)?;
    let labels_raw = read(labels_path)?;
    let labels = in_file(labels_path, parse_labels(&labels_raw))?;
    let m = in_file(ct_path, parse_ct_table(&raw, cfg.orientation, &labels))?;
    if m.n_genes() == 0 {
        return Err(Error::File {
            path: ct_path.to_path_buf(),
            message: "table lists no genes".into(),
        });
    }
    let (ground, flight) = m.class_counts();
    if ground < 2 || flight < 2 {
        return Err(Error::File {
            path: labels_path.to_path_buf(),
            message: format!("need ≥ 2 samples per class, got {ground} ground and {flight} flight"),
        });
    }
    let mut digests = BTreeMap::from([
        ("ct_table".to_string(), sha256(raw.as_bytes())),
        ("labels".to_string(), sha256(labels_raw.as_bytes())),
    ]);
    let annotation = match &cfg.inputs.annotation {
        Some(p) => {
            let raw = read(p)?;
            digests.insert("annotation".into(), sha256(raw.as_bytes()));
            in_file(p, PathwayAnnotation::parse(&raw))?
        }
        None => PathwayAnnotation::reference(),
    };
    Ok(Dataset {
        ct: impute_with(&m, cfg.imputation_value),
        annotation,
        digests,
    })
}

fn dge_records(ds: &Dataset, cfg: &RunConfig) -> Result<Vec<DgeRecord>> {
    differential_expression(&ds.ct, &cfg.thresholds)
}

fn dge_artifacts(ds: &Dataset, cfg: &RunConfig, dge: &[DgeRecord]) -> Result<Vec<Artifact>> {
    let mut out = vec![
        artifact("dge.csv", tables::dge(dge)),
        artifact("dge_census.csv", tables::dge_census(dge, cfg.thresholds.alpha)),
        artifact("volcano.csv", tables::volcano(dge)),
        artifact("volcano.svg", volcano_svg(dge, cfg)),
    ];
    let summaries = cfg
        .deep_dive_genes
        .iter()
        .filter(|g| ds.ct.gene_index(g).is_some())
        .map(|g| gene_summary(&ds.ct, g))
        .collect::<Result<Vec<_>>>()?;
    if !summaries.is_empty() {
        out.push(artifact("deep_dive.csv", tables::deep_dive(&summaries)));
        out.push(artifact("deep_dive_stats.csv", tables::deep_dive_stats(&summaries)));
        out.push(artifact("deep_dive.svg", deep_dive_svg(&summaries)));
    }
    Ok(out)
}

fn neg_log10(p: f64) -> f64 {
    -p.max(f64::MIN_POSITIVE).log10()
}

fn volcano_svg(dge: &[DgeRecord], cfg: &RunConfig) -> String {
    let guide = cfg.thresholds.fc_up.log2();
    let xs = dge.iter().map(|r| r.log2_fc);
    let xmax = xs.fold(guide, |a, x| a.max(x.abs()));
    let ymax = dge.iter().map(|r| neg_log10(r.p_value)).fold(neg_log10(cfg.thresholds.alpha), f64::max);
    let mut c = svg::Chart::new("Volcano plot", "log2 fold change", "-log10 p", (-xmax, xmax), (0.0, ymax));
    for r in dge {
        let color = match r.regulation {
            Some(Regulation::Up) => svg::FLIGHT,
            Some(Regulation::Down) => svg::GROUND,
            _ => svg::NEUTRAL,
        };
        c.point(r.log2_fc, neg_log10(r.p_value), color);
    }
    let mut ranked: Vec<&DgeRecord> = dge.iter().collect();
    ranked.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then_with(|| a.gene.cmp(&b.gene)));
    for r in ranked.iter().take(10) {
        c.label(r.log2_fc, neg_log10(r.p_value), &r.gene);
    }
    c.vline(guide);
    c.vline(-guide);
    c.hline(neg_log10(cfg.thresholds.alpha));
    c.legend(&[("UP", svg::FLIGHT), ("DOWN", svg::GROUND), ("NS", svg::NEUTRAL)]);
    c.finish()
}

fn deep_dive_svg(summaries: &[crate::stats::GeneSummary]) -> String {
    let all = summaries.iter().flat_map(|s| s.ground_values.iter().chain(&s.flight_values));
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let n = summaries.len() as f64;
    let mut c = svg::Chart::new("Per-gene Ct by group", "gene × group", "Ct", (-0.5, 2.0 * n - 0.5), (lo, hi));
    for (k, s) in summaries.iter().enumerate() {
        for (g, values, color) in [(0, &s.ground_values, svg::GROUND), (1, &s.flight_values, svg::FLIGHT)] {
            let x0 = (2 * k + g) as f64;
            for (i, v) in values.iter().enumerate() {
                let jitter = ((i * 7) % 11) as f64 / 11.0 * 0.4 - 0.2;
                c.point(x0 + jitter, *v, color);
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            c.polyline(&[(x0 - 0.3, mean), (x0 + 0.3, mean)], "black", false);
        }
        c.label(2.0 * k as f64, hi, &s.gene);
    }
    c.legend(&[("ground", svg::GROUND), ("flight", svg::FLIGHT)]);
    c.finish()
}

fn pca_artifacts(ds: &Dataset, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let x = standardize(&ds.ct, None)?;
    let max = (ds.ct.n_samples() - 1).min(ds.ct.n_genes());
    let p = pca(&x, cfg.pca_components.min(max))?;
    let mut out = vec![
        artifact("pca_scores.csv", tables::pca_scores(&p, &ds.ct)),
        artifact("pca_variance.csv", tables::pca_variance(&p)),
    ];
    if p.scores.ncols() >= 2 {
        let (x1, x2) = (p.scores.column(0), p.scores.column(1));
        let range = |v: ndarray::ArrayView1<f64>| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let pct = |i: usize| 100.0 * p.explained_variance_ratio[i];
        let mut c = svg::Chart::new(
            "PCA of standardized Ct",
            &format!("PC1 ({:.1}%)", pct(0)),
            &format!("PC2 ({:.1}%)", pct(1)),
            range(x1),
            range(x2),
        );
        for (i, id) in ds.ct.sample_ids().iter().enumerate() {
            let color = if ds.ct.labels()[i].is_positive() { svg::FLIGHT } else { svg::GROUND };
            c.point(x1[i], x2[i], color);
            c.label(x1[i], x2[i], id);
        }
        c.legend(&[("ground", svg::GROUND), ("flight", svg::FLIGHT)]);
        out.push(artifact("pca.svg", c.finish()));
    }
    let corr = correlation_matrix(x.values(), ds.ct.sample_ids(), Axis::Samples)?;
    let d = hcluster(&corr, cfg.n_clusters.min(ds.ct.n_samples()))?;
    let purity = cluster_purity(&d.assignments, ds.ct.labels());
    out.push(artifact("sample_clusters.csv", tables::clusters(&d, &ds.ct, purity)));
    out.push(artifact("sample_dendrogram.csv", tables::merges(&d)));
    out.push(artifact("sample_correlation.csv", tables::correlation(&corr)));
    Ok(out)
}

fn crossval_reports(ds: &Dataset, cfg: &RunConfig, kinds: &[ClassifierKind], sets: &[FeatureSet]) -> Result<Vec<CvReport>> {
    let mut reports = Vec::new();
    for &kind in kinds {
        for &set in sets {
            let spec = ClassifierSpec {
                kind,
                hyperparameters: cfg.hyperparameters.clone(),
                seed: cfg.seed,
            };
            reports.push(loocv(&spec, &ds.ct, set, cfg.policy)?);
        }
    }
    Ok(reports)
}

fn crossval_artifacts(reports: &[CvReport]) -> Result<Vec<Artifact>> {
    let mut out = vec![
        artifact("cv_grid.csv", grid_csv(reports)),
        artifact("roc.csv", roc_csv(reports)),
        artifact("cv_reports.json", serde_json::to_string_pretty(reports)? + "\n"),
    ];
    let mut sets: Vec<FeatureSet> = reports.iter().map(|r| r.feature_set).collect();
    sets.sort();
    sets.dedup();
    for set in sets {
        let mut c = svg::Chart::new(
            &format!("LOO-CV ROC, {}", set.label()),
            "false positive rate",
            "true positive rate",
            (0.0, 1.0),
            (0.0, 1.0),
        );
        c.polyline(&[(0.0, 0.0), (1.0, 1.0)], svg::NEUTRAL, true);
        let mut legend = Vec::new();
        for (i, r) in reports.iter().filter(|r| r.feature_set == set).enumerate() {
            let color = svg::PALETTE[i % svg::PALETTE.len()];
            c.polyline(&r.roc_points, color, false);
            let auc = r.auc.map(|a| format!("{a:.3}")).unwrap_or_else(|| "n/a".into());
            legend.push((format!("{} (AUC {auc})", r.classifier.display_name()), color));
        }
        let entries: Vec<(&str, &str)> = legend.iter().map(|(t, c)| (t.as_str(), *c)).collect();
        c.legend(&entries);
        out.push(artifact(format!("roc_{set}.svg"), c.finish()));
    }
    Ok(out)
}

fn explain_artifacts(ds: &Dataset, cfg: &RunConfig, dge: &[DgeRecord]) -> Result<Vec<Artifact>> {
    let x = standardize(&ds.ct, None)?;
    let fit_kind = |kind| {
        let spec = ClassifierSpec {
            kind,
            hyperparameters: cfg.hyperparameters.clone(),
            seed: cfg.seed,
        };
        fit(&spec, &x, ds.ct.labels())
    };
    let rf = fit_kind(ClassifierKind::RandomForest)?;
    let gbt = fit_kind(ClassifierKind::GradientBoostedTrees)?;
    let (sources, rf_shap, gbt_shap) = standard_sources(&rf, &gbt, &x)?;
    let consensus = consensus_rank(&sources, dge)?;
    let source_names: Vec<String> = sources.iter().map(|s| s.0.clone()).collect();
    let ids = ds.ct.sample_ids();
    let rf_summary = shap_summary(&rf_shap);
    let gbt_summary = shap_summary(&gbt_shap);
    let top = |s: &[(String, f64)]| s.iter().take(20).cloned().collect::<Vec<_>>();
    let mut out = vec![
        artifact("shap_rf.csv", rf_shap.to_csv(ids)),
        artifact("shap_gbt.csv", gbt_shap.to_csv(ids)),
        artifact("shap_summary_rf.csv", summary_csv(&rf_summary)),
        artifact("shap_summary_gbt.csv", summary_csv(&gbt_summary)),
        artifact(
            "shap_bar_rf.svg",
            svg::bar_chart("Random forest: mean |SHAP| (probability)", "mean |SHAP value|", &top(&rf_summary)),
        ),
        artifact(
            "shap_bar_gbt.svg",
            svg::bar_chart("Gradient boosting: mean |SHAP| (logit)", "mean |SHAP value|", &top(&gbt_summary)),
        ),
        artifact("consensus.csv", consensus_csv(&source_names, &consensus)),
    ];
    let bars: Vec<(String, f64)> = consensus.iter().take(20).map(|r| (r.gene.clone(), r.consensus)).collect();
    out.push(artifact(
        "consensus_bar.svg",
        svg::bar_chart("Consensus feature importance", "consensus score", &bars),
    ));

    let genes: Vec<String> = consensus.iter().take(cfg.network_genes).map(|r| r.gene.clone()).collect();
    if genes.len() >= 2 {
        let sub = ds.ct.select_genes(&genes)?;
        let corr = correlation_matrix(sub.values(), sub.gene_names(), Axis::Genes)?;
        let edges = network_edges(&corr, cfg.edge_threshold);
        let index: BTreeMap<&str, usize> = corr.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let idx_edges: Vec<(usize, usize, f64)> = edges.iter().map(|e| (index[e.a.as_str()], index[e.b.as_str()], e.r)).collect();
        out.push(artifact("network_correlation.csv", tables::correlation(&corr)));
        out.push(artifact("network_edges.csv", tables::edges(&edges)));
        out.push(artifact(
            "network.svg",
            svg::network(
                &format!("Gene correlation network (|r| ≥ {})", cfg.edge_threshold),
                &corr.names,
                &idx_edges,
            ),
        ));
    }
    Ok(out)
}

fn pathway_artifacts(ds: &Dataset, dge: &[DgeRecord]) -> Vec<Artifact> {
    vec![artifact("pathway.csv", tables::pathways(&pathway_summary(dge, &ds.annotation)))]
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config_hash: String,
    seed: u64,
    inputs: BTreeMap<String, String>,
    artifacts: Vec<ManifestEntry>,
}

fn infer_class(sample: &str) -> Option<Class> {
    let upper = sample.to_ascii_uppercase();
    let tokens: Vec<&str> = upper.split(|c: char| !c.is_ascii_alphanumeric()).collect();
    let has = |keys: &[&str]| tokens.iter().any(|t| keys.contains(t));
    match (has(&["FLT", "FLIGHT"]), has(&["GC", "GROUND", "GRD"])) {
        (true, false) => Some(Class::Flight),
        (false, true) => Some(Class::GroundControl),
        _ => None,
    }
}

/// Sample ids of a raw table: the header (genes as rows) or the first column.
fn sample_ids_of(raw: &str, orientation: Orientation) -> Vec<String> {
    let delim = if raw.lines().next().is_some_and(|h| h.contains('\t')) { '\t' } else { ',' };
    let clean = |s: &str| s.trim().trim_matches('"').to_string();
    let mut lines = raw.lines().filter(|l| !l.trim().is_empty());
    match orientation {
        Orientation::GenesAsRows => lines
            .next()
            .map(|h| h.split(delim).skip(1).map(clean).collect())
            .unwrap_or_default(),
        Orientation::SamplesAsRows => lines
            .skip(1)
            .filter_map(|l| l.split(delim).next().map(clean))
            .collect(),
    }
}

fn convert_artifacts(input: &Path, orientation: Orientation, labels: Option<&Path>, infer: bool) -> Result<(Vec<Artifact>, BTreeMap<String, String>)> {
    let raw = read(input)?;
    let mut digests = BTreeMap::from([("export".to_string(), sha256(raw.as_bytes()))]);
    let label_map = match (labels, infer) {
        (Some(p), _) => {
            digests.insert("labels".into(), sha256(read(p)?.as_bytes()));
            load_labels(p)?
        }
        (None, true) => sample_ids_of(&raw, orientation)
            .into_iter()
            .map(|id| {
                infer_class(&id)
                    .map(|c| (id.clone(), c))
                    .ok_or_else(|| Error::Label(format!("cannot infer a class from sample name {id:?}")))
            })
            .collect::<Result<_>>()?,
        (None, false) => return Err(Error::arg("convert needs --labels or --infer-labels")),
    };
    let m = in_file(input, parse_ct_table(&raw, orientation, &label_map))?;
    Ok((
        vec![artifact("ct.csv", m.to_canonical_csv()), artifact("labels.csv", m.labels_csv())],
        digests,
    ))
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(p) = &g.ct {
        cfg.inputs.ct_table = Some(p.clone());
    }
    if let Some(p) = &g.labels {
        cfg.inputs.labels = Some(p.clone());
    }
    if let Some(p) = &g.annotation {
        cfg.inputs.annotation = Some(p.clone());
    }
    if let Some(o) = g.orientation {
        cfg.orientation = o;
    }
    if let Some(k) = g.top_k {
        cfg.top_k = k;
    }
    if let Some(p) = g.policy {
        cfg.policy = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(g: &GlobalArgs, cfg: &RunConfig) -> PathBuf {
    g.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Artifacts of `command`, plus the digests of the inputs they came from.
fn compute(command: &Command, cfg: &mut RunConfig) -> Result<(Vec<Artifact>, BTreeMap<String, String>)> {
    if let Command::Synth {
        n_per_group,
        genes,
        signal_genes,
        effect,
        noise_sd,
    } = command
    {
        let s = SyntheticCohortConfig {
            n_per_group: *n_per_group,
            n_genes: *genes,
            n_signal_genes: *signal_genes,
            effect_size_ct: *effect,
            noise_sd: *noise_sd,
            seed: cfg.seed,
        };
        let m = synthesize_cohort(&s)?;
        return Ok((
            vec![artifact("ct.csv", m.to_canonical_csv()), artifact("labels.csv", m.labels_csv())],
            BTreeMap::new(),
        ));
    }
    if let Command::Convert { input, infer_labels } = command {
        let orientation = cfg.orientation;
        return convert_artifacts(input, orientation, cfg.inputs.labels.as_deref(), *infer_labels);
    }
    if let Command::Crossval { classifiers, feature_sets } = command {
        if !classifiers.is_empty() {
            cfg.classifiers = classifiers.clone();
        }
        if !feature_sets.is_empty() {
            cfg.feature_sets = Some(feature_sets.clone());
        }
    }
    let ds = load(cfg)?;
    let dge = dge_records(&ds, cfg)?;
    let mut out = Vec::new();
    match command {
        Command::Dge => out.extend(dge_artifacts(&ds, cfg, &dge)?),
        Command::Pca => out.extend(pca_artifacts(&ds, cfg)?),
        Command::Pathway => out.extend(pathway_artifacts(&ds, &dge)),
        Command::Crossval { .. } => {
            let reports = crossval_reports(&ds, cfg, &cfg.classifiers, &cfg.feature_sets())?;
            out.extend(crossval_artifacts(&reports)?);
        }
        Command::Explain => {
            out.extend(explain_artifacts(&ds, cfg, &dge)?);
            out.extend(pca_artifacts(&ds, cfg)?);
            out.extend(pathway_artifacts(&ds, &dge));
        }
        Command::Report => {
            out.extend(dge_artifacts(&ds, cfg, &dge)?);
            out.extend(pca_artifacts(&ds, cfg)?);
            let reports = crossval_reports(&ds, cfg, &cfg.classifiers, &cfg.feature_sets())?;
            out.extend(crossval_artifacts(&reports)?);
            out.extend(explain_artifacts(&ds, cfg, &dge)?);
            out.extend(pathway_artifacts(&ds, &dge));
        }
        Command::Synth { .. } | Command::Convert { .. } => unreachable!("handled above"),
    }
    Ok((out, ds.digests))
}

/// Runs one parsed command line and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = effective_config(&cli.global)?;
    if matches!(cli.command, Command::Convert { .. }) && cli.global.orientation.is_none() {
        cfg.orientation = Orientation::GenesAsRows;
    }
    let dir = output_dir(&cli.global, &cfg);
    let (mut artifacts, inputs) = compute(&cli.command, &mut cfg)?;
    let mut stored = cfg.clone();
    stored.output_dir = None;
    stored.inputs = Inputs::default();
    artifacts.push(artifact("config.json", serde_json::to_string_pretty(&stored)? + "\n"));
    artifacts.sort_by(|a, b| a.name.cmp(&b.name));

    let manifest = Manifest {
        tool: "qpcr-xai",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        inputs,
        artifacts: artifacts
            .iter()
            .map(|a| ManifestEntry {
                file: a.name.clone(),
                bytes: a.bytes.len(),
                sha256: sha256(&a.bytes),
            })
            .collect(),
    };
    artifacts.push(artifact("manifest.json", serde_json::to_string_pretty(&manifest)? + "\n"));

    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Entry point of the `qpcr-xai` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be ≥ 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    match result {
        Ok(files) => {
            if let Some(dir) = files.first().and_then(|f| f.parent()) {
                println!("wrote {} files to {}", files.len(), dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_inference_from_names() {
        assert_eq!(infer_class("RR1_FLT_wERCC_3"), Some(Class::Flight));
        assert_eq!(infer_class("rr1-gc-5"), Some(Class::GroundControl));
        assert_eq!(infer_class("Basal_1"), None);
        assert_eq!(infer_class("FLT_GC"), None);
    }

    #[test]
    fn sample_ids_by_orientation() {
        let raw = "gene\tA\tB\nUcp1\t30\t31\n";
        assert_eq!(sample_ids_of(raw, Orientation::GenesAsRows), vec!["A", "B"]);
        let raw = "sample_id,g1\nA,1\nB,2\n";
        assert_eq!(sample_ids_of(raw, Orientation::SamplesAsRows), vec!["A", "B"]);
    }
}
