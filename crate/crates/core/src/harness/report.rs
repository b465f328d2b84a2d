use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::correlation::CorrelationMatrix;
use super::runner::{ExperimentReport, ResultRow};
use crate::error::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const CORRELATIONS_FILE: &str = "correlations.json";
pub const CONFIG_ECHO_FILE: &str = "config_echo.json";
pub const PLOTDATA_DIR: &str = "plotdata";

pub const RESULTS_HEADER: [&str; 12] = [
    "stage",
    "risk_model",
    "risk_value",
    "outlier_fraction",
    "metric",
    "value",
    "ci_low",
    "ci_high",
    "stdev",
    "runtime_seconds",
    "control_adjusted",
    "error",
];

#[derive(Serialize)]
struct ConfigEcho<'a> {
    config: &'a ExperimentConfig,
    seeds: &'a BTreeMap<String, u64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(RESULTS_HEADER)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(Error::HeaderMismatch(format!("{path:?}: {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes `results.csv`, `correlations.json`, `config_echo.json` and the
/// plot series; returns the paths written.
pub fn write_report(report: &ExperimentReport, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results = out_dir.join(RESULTS_FILE);
    write_results_csv(&report.rows, &results)?;
    let corr = out_dir.join(CORRELATIONS_FILE);
    write_json(&corr, &report.correlations)?;
    let echo = out_dir.join(CONFIG_ECHO_FILE);
    write_json(
        &echo,
        &ConfigEcho {
            config: cfg,
            seeds: &report.seeds,
        },
    )?;
    let mut paths = vec![results, corr, echo];
    paths.extend(write_plotdata(&report.rows, &out_dir.join(PLOTDATA_DIR))?);
    Ok(paths)
}

pub fn read_correlations(path: &Path) -> Result<BTreeMap<String, CorrelationMatrix>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn column(row: &ResultRow) -> String {
    if row.control_adjusted {
        format!("{}_adjusted", row.metric)
    } else {
        row.metric.clone()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One wide CSV per (stage, risk model): a row per (risk value, outlier
/// fraction) and value / CI columns per metric.
pub fn write_plotdata(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut groups: BTreeMap<(String, String), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.stage.clone(), r.risk_model.clone())).or_default().push(r);
    }
    let mut paths = Vec::new();
    for ((stage, model), rs) in groups {
        let columns: BTreeSet<String> = rs.iter().map(|r| column(r)).collect();
        let mut points: Vec<(f64, f64)> = rs.iter().map(|r| (r.risk_value, r.outlier_fraction)).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        points.dedup();

        let path = dir.join(format!("{stage}_{model}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["risk_value".to_string(), "outlier_fraction".to_string()];
        for c in &columns {
            header.extend([c.clone(), format!("{c}_ci_low"), format!("{c}_ci_high")]);
        }
        w.write_record(&header)?;
        for (rv, of) in points {
            let mut rec = vec![rv.to_string(), of.to_string()];
            for c in &columns {
                let hit = rs.iter().find(|r| r.risk_value == rv && r.outlier_fraction == of && column(r) == *c);
                rec.push(cell(hit.and_then(|r| r.value)));
                rec.push(cell(hit.and_then(|r| r.ci_low)));
                rec.push(cell(hit.and_then(|r| r.ci_high)));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
