//! CSV renderings of analysis results.

use crate::decomp::{CorrelationMatrix, Dendrogram, Edge, PcaResult};
use crate::format::{sig6, CsvBuilder};
use crate::ingest::CtMatrix;
use crate::stats::{DgeRecord, GeneSummary, PathwayRow};

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// Every gene, ordered by p-value then name.
pub fn dge(records: &[DgeRecord]) -> String {
    let mut rows: Vec<&DgeRecord> = records.iter().collect();
    rows.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then_with(|| a.gene.cmp(&b.gene)));
    let mut t = CsvBuilder::new(&[
        "gene",
        "mean_ct_ground",
        "mean_ct_flight",
        "sd_ct_ground",
        "sd_ct_flight",
        "delta_delta_ct",
        "fold_change",
        "log2_fc",
        "t_stat",
        "welch_df",
        "p_value",
        "q_value",
        "regulation",
    ]);
    for r in rows {
        t.row(&[
            r.gene.clone(),
            sig6(r.mean_ct_group0),
            sig6(r.mean_ct_group1),
            sig6(r.sd_ct_group0),
            sig6(r.sd_ct_group1),
            sig6(r.delta_delta_ct),
            sig6(r.fold_change),
            sig6(r.log2_fc),
            sig6(r.t_stat),
            sig6(r.welch_df),
            sig6(r.p_value),
            opt(r.q_value),
            r.regulation.map(|g| g.as_str().to_string()).unwrap_or_default(),
        ]);
    }
    t.finish()
}

pub fn dge_census(records: &[DgeRecord], alpha: f64) -> String {
    let count = |f: &dyn Fn(&DgeRecord) -> bool| records.iter().filter(|r| f(r)).count().to_string();
    let mut t = CsvBuilder::new(&["metric", "value"]);
    t.row(&["genes".to_string(), records.len().to_string()]);
    t.row(&["nominal_p_below_alpha".to_string(), count(&|r| r.p_value < alpha)]);
    t.row(&["q_below_alpha".to_string(), count(&|r| r.q_value.is_some_and(|q| q < alpha))]);
    t.row(&["up".to_string(), count(&|r| r.regulation.is_some_and(|g| g.as_str() == "UP"))]);
    t.row(&["down".to_string(), count(&|r| r.regulation.is_some_and(|g| g.as_str() == "DOWN"))]);
    t.finish()
}

pub fn volcano(records: &[DgeRecord]) -> String {
    let mut t = CsvBuilder::new(&["gene", "log2_fc", "neg_log10_p", "regulation"]);
    for r in records {
        t.row(&[
            r.gene.clone(),
            sig6(r.log2_fc),
            sig6(-r.p_value.max(f64::MIN_POSITIVE).log10()),
            r.regulation.map(|g| g.as_str().to_string()).unwrap_or_default(),
        ]);
    }
    t.finish()
}

pub fn deep_dive(summaries: &[GeneSummary]) -> String {
    let mut t = CsvBuilder::new(&["gene", "group", "value_index", "ct"]);
    for s in summaries {
        for (group, values) in [("ground", &s.ground_values), ("flight", &s.flight_values)] {
            for (i, v) in values.iter().enumerate() {
                t.row(&[s.gene.clone(), group.to_string(), i.to_string(), sig6(*v)]);
            }
        }
    }
    t.finish()
}

pub fn deep_dive_stats(summaries: &[GeneSummary]) -> String {
    let mut t = CsvBuilder::new(&[
        "gene", "n_ground", "mean_ground", "sd_ground", "n_flight", "mean_flight", "sd_flight",
        "delta_delta_ct", "fold_change", "p_value",
    ]);
    for s in summaries {
        t.row(&[
            s.gene.clone(),
            s.ground.n.to_string(),
            sig6(s.ground.mean),
            sig6(s.ground.sd),
            s.flight.n.to_string(),
            sig6(s.flight.mean),
            sig6(s.flight.sd),
            sig6(s.delta_delta_ct),
            sig6(s.fold_change),
            sig6(s.p_value),
        ]);
    }
    t.finish()
}

pub fn pca_scores(p: &PcaResult, m: &CtMatrix) -> String {
    let c = p.scores.ncols();
    let mut header = vec!["sample_id".to_string()];
    header.extend((1..=c).map(|i| format!("pc{i}")));
    header.push("label".into());
    let mut t = CsvBuilder::new(&header);
    for (i, id) in m.sample_ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(p.scores.row(i).iter().map(|v| sig6(*v)));
        row.push(m.labels()[i].index().to_string());
        t.row(&row);
    }
    t.finish()
}

pub fn pca_variance(p: &PcaResult) -> String {
    let mut t = CsvBuilder::new(&["component", "singular_value", "explained_variance_ratio", "cumulative"]);
    let mut cum = 0.0;
    for (i, (s, r)) in p.singular_values.iter().zip(&p.explained_variance_ratio).enumerate() {
        cum += r;
        t.row(&[format!("pc{}", i + 1), sig6(*s), sig6(*r), sig6(cum)]);
    }
    t.finish()
}

pub fn clusters(d: &Dendrogram, m: &CtMatrix, purity: f64) -> String {
    let mut t = CsvBuilder::new(&["sample_id", "label", "cluster", "leaf_position"]);
    let mut pos = vec![0; d.names.len()];
    for (p, &leaf) in d.leaf_order.iter().enumerate() {
        pos[leaf] = p;
    }
    for (i, name) in d.names.iter().enumerate() {
        t.row(&[
            name.clone(),
            m.labels()[i].index().to_string(),
            d.assignments[i].to_string(),
            pos[i].to_string(),
        ]);
    }
    t.row(&["purity".to_string(), String::new(), String::new(), sig6(purity)]);
    t.finish()
}

pub fn merges(d: &Dendrogram) -> String {
    let mut t = CsvBuilder::new(&["step", "left", "right", "height", "size"]);
    for (i, mg) in d.merges.iter().enumerate() {
        t.row(&[
            i.to_string(),
            mg.left.to_string(),
            mg.right.to_string(),
            sig6(mg.height),
            mg.size.to_string(),
        ]);
    }
    t.finish()
}

pub fn correlation(c: &CorrelationMatrix) -> String {
    let mut header = vec![String::new()];
    header.extend(c.names.iter().cloned());
    let mut t = CsvBuilder::new(&header);
    for (i, n) in c.names.iter().enumerate() {
        let mut row = vec![n.clone()];
        row.extend(c.r.row(i).iter().map(|v| sig6(*v)));
        t.row(&row);
    }
    t.finish()
}

pub fn edges(e: &[Edge]) -> String {
    let mut t = CsvBuilder::new(&["gene_a", "gene_b", "r"]);
    for x in e {
        t.row(&[x.a.clone(), x.b.clone(), sig6(x.r)]);
    }
    t.finish()
}

pub fn pathways(rows: &[PathwayRow]) -> String {
    let mut t = CsvBuilder::new(&["pathway", "gene_count", "mean_fc", "max_fc", "min_p", "mean_log2_fc"]);
    for r in rows {
        t.row(&[
            r.pathway.display_name().to_string(),
            r.gene_count.to_string(),
            sig6(r.mean_fc),
            sig6(r.max_fc),
            sig6(r.min_p),
            sig6(r.mean_log2_fc),
        ]);
    }
    t.finish()
}
