//! CSV/TSV emission. All floats are written with Rust's shortest round-trip
//! formatting, so reruns of the same config are byte-identical.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{AggregateRow, RunRecord};
use crate::error::{Result, ShbError};

pub const RUNS_CSV_HEADER: &str =
    "run_id,seed,method,alpha0,beta_rule,k,objective,f_gap,d_norm_sq,z_norm_sq,feasible,k_star,grad_norm_at_bar,diverged_at";

pub const AGGREGATE_CSV_HEADER: &str = "method,alpha0,epsilon,median,p10,p90,reach_fraction";

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_CSV_HEADER);
    out.push('\n');
    for r in records {
        for row in &r.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.run_id,
                r.seed,
                r.method,
                r.alpha0,
                r.beta_rule,
                row.k,
                row.objective,
                fmt_opt(&row.f_gap),
                row.d_norm_sq,
                row.z_norm_sq,
                if row.feasible { 1 } else { 0 },
                fmt_opt(&r.k_star),
                fmt_opt(&r.grad_norm_at_bar),
                fmt_opt(&r.diverged_at),
            ));
        }
    }
    out
}

pub fn aggregate_csv(aggregates: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            a.method, a.alpha0, a.epsilon, a.median, a.p10, a.p90, a.reach_fraction
        ));
    }
    out
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Two-column series: median f-gap (falling back to the raw objective) per
/// recorded iteration, across the seeds of each (method, alpha0) cell.
fn gap_series(records: &[RunRecord], method: &str, alpha0: f64) -> Vec<(usize, f64)> {
    let cell: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.method == method && r.alpha0 == alpha0)
        .collect();
    let Some(first) = cell.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, row) in first.rows.iter().enumerate() {
        let mut vals: Vec<f64> = cell
            .iter()
            .filter_map(|r| r.rows.get(i))
            .filter(|rr| rr.k == row.k)
            .map(|rr| rr.f_gap.unwrap_or(rr.objective))
            .collect();
        if vals.is_empty() {
            continue;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).expect("no NaN gaps"));
        out.push((row.k, super::quantile_lower(&vals, 0.5)));
    }
    out
}

fn tsv(series: &[(impl std::fmt::Display, impl std::fmt::Display)]) -> String {
    let mut out = String::new();
    for (a, b) in series {
        out.push_str(&format!("{a}\t{b}\n"));
    }
    out
}

/// Write runs.csv, aggregate.csv, plotdata/*.tsv, and manifest.txt into
/// `outdir`; returns (relative path, sha256) pairs in manifest order.
pub fn emit_outputs(
    records: &[RunRecord],
    aggregates: &[AggregateRow],
    outdir: &Path,
) -> Result<Vec<(String, String)>> {
    fs::create_dir_all(outdir.join("plotdata"))
        .map_err(|e| ShbError::io(outdir.display().to_string(), e))?;

    let mut files: Vec<(String, String)> = vec![
        ("runs.csv".into(), runs_csv(records)),
        ("aggregate.csv".into(), aggregate_csv(aggregates)),
    ];

    let mut cells: Vec<(String, f64)> = Vec::new();
    for r in records {
        let key = (r.method.clone(), r.alpha0);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    for (method, alpha0) in &cells {
        let series = gap_series(records, method, *alpha0);
        files.push((
            format!("plotdata/gap_{}_a{}.tsv", sanitize(method), sanitize(&alpha0.to_string())),
            tsv(&series),
        ));
    }
    // epochs-to-eps vs alpha0, one file per (method, epsilon)
    let mut method_eps: Vec<(String, f64)> = Vec::new();
    for a in aggregates {
        let key = (a.method.clone(), a.epsilon);
        if !method_eps.contains(&key) {
            method_eps.push(key);
        }
    }
    for (method, eps) in &method_eps {
        let series: Vec<(String, String)> = aggregates
            .iter()
            .filter(|a| &a.method == method && a.epsilon == *eps)
            .map(|a| (a.alpha0.to_string(), a.median.to_string()))
            .collect();
        files.push((
            format!("plotdata/epochs_{}_eps{}.tsv", sanitize(method), sanitize(&eps.to_string())),
            tsv(&series),
        ));
    }

    let mut manifest: Vec<(String, String)> = Vec::new();
    for (rel, contents) in &files {
        let path = outdir.join(rel);
        fs::write(&path, contents).map_err(|e| ShbError::io(path.display().to_string(), e))?;
        let hash = Sha256::digest(contents.as_bytes());
        manifest.push((rel.clone(), format!("{hash:x}")));
    }
    manifest.sort();
    let mut manifest_text = String::new();
    for (rel, hash) in &manifest {
        manifest_text.push_str(&format!("{hash}  {rel}\n"));
    }
    let mpath = outdir.join("manifest.txt");
    fs::write(&mpath, &manifest_text).map_err(|e| ShbError::io(mpath.display().to_string(), e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_records_give_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = emit_outputs(&[], &[], dir.path()).unwrap();
        let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert_eq!(runs.trim_end(), RUNS_CSV_HEADER);
        let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
        assert_eq!(agg.trim_end(), AGGREGATE_CSV_HEADER);
        assert!(dir.path().join("manifest.txt").exists());
        assert_eq!(manifest.len(), 2);
    }

    #[test]
    fn one_run_two_epsilons_two_aggregate_rows() {
        let aggs = vec![
            AggregateRow {
                method: "shb_beta0.5".into(),
                alpha0: 0.1,
                epsilon: 0.1,
                median: 2.0,
                p10: 2.0,
                p90: 2.0,
                reach_fraction: 1.0,
            },
            AggregateRow {
                method: "shb_beta0.5".into(),
                alpha0: 0.1,
                epsilon: 0.01,
                median: f64::INFINITY,
                p10: f64::INFINITY,
                p90: f64::INFINITY,
                reach_fraction: 0.0,
            },
        ];
        let text = aggregate_csv(&aggs);
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("inf"));
    }

    #[test]
    fn rerun_bytes_identical() {
        let cfg = crate::harness::tests::smoke_config_for_output();
        let out1 = crate::harness::run_experiment(&cfg).unwrap();
        let out2 = crate::harness::run_experiment(&cfg).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = emit_outputs(&out1.records, &out1.aggregates, d1.path()).unwrap();
        let m2 = emit_outputs(&out2.records, &out2.aggregates, d2.path()).unwrap();
        assert_eq!(m1, m2);
        let b1 = fs::read(d1.path().join("runs.csv")).unwrap();
        let b2 = fs::read(d2.path().join("runs.csv")).unwrap();
        assert_eq!(b1, b2);
    }
}
