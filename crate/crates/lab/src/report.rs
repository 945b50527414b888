//! Report files: per-snapshot CSV, JSON summary keyed by criterion, plot data.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checks::{CheckOutcome, AC_IDS};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::record::{RunRecord, RunStatus};

/// Header of `records.csv`, in [`crate::record::SnapshotRow`] field order.
pub const CSV_COLUMNS: [&str; 24] = [
    "index",
    "study",
    "family",
    "case",
    "epsilon",
    "delta",
    "s",
    "t",
    "r_norm",
    "r_t_norm",
    "rho_t_norm",
    "e_s",
    "quadratic_part",
    "epsilon_terms",
    "f_plus",
    "f_minus",
    "f_tilde",
    "interaction",
    "u_linf",
    "w_plus_linf",
    "w_minus_linf",
    "r_linf",
    "r_mean",
    "in_window",
];

pub const RECORDS_CSV: &str = "records.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const RECORDS_JSON: &str = "records.json";
pub const ERROR_VS_T: &str = "error_vs_t.csv";
pub const ERROR_VS_DELTA: &str = "error_vs_delta.csv";
pub const RESIDUAL_VS_DELTA: &str = "residual_vs_delta.csv";

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> LabError + '_ {
    move |source| LabError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// One row per snapshot per run, header always present.
pub fn records_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let path = Path::new(RECORDS_CSV);
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_err(path))?;
    for row in records.iter().flat_map(|r| &r.rows) {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.into_inner()
        .map_err(|e| LabError::io(path, e.into_error()))
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let path = Path::new("plot data");
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.into_inner()
        .map_err(|e| LabError::io(path, e.into_error()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `x, y` files: error vs t, terminal error vs delta, residual vs delta.
pub fn plot_data(records: &[RunRecord]) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let done = || records.iter().filter(|r| r.completed());
    let error_vs_t = table(
        &[
            "index", "family", "case", "epsilon", "delta", "s", "t", "r_norm",
        ],
        done().flat_map(|r| {
            r.rows
                .iter()
                .filter(|row| row.r_norm.is_some())
                .map(move |row| {
                    vec![
                        r.index.to_string(),
                        r.family.to_string(),
                        r.case.name().into(),
                        r.epsilon.to_string(),
                        r.delta.to_string(),
                        r.s.to_string(),
                        row.t.to_string(),
                        opt(row.r_norm),
                    ]
                })
        }),
    )?;
    let error_vs_delta = table(
        &[
            "family",
            "case",
            "s",
            "epsilon",
            "delta",
            "terminal_error",
            "c_hat",
            "rt0_norm",
        ],
        done()
            .filter(|r| r.summary.terminal_error.is_some())
            .map(|r| {
                vec![
                    r.family.to_string(),
                    r.case.name().into(),
                    r.s.to_string(),
                    r.epsilon.to_string(),
                    r.delta.to_string(),
                    opt(r.summary.terminal_error),
                    opt(r.summary.c_hat),
                    opt(r.summary.rt0_norm),
                ]
            }),
    )?;
    let residual_vs_delta = table(
        &[
            "family",
            "case",
            "s",
            "epsilon",
            "delta",
            "sup_f_plus",
            "sup_f_minus",
            "sup_f_tilde",
        ],
        done().map(|r| {
            vec![
                r.family.to_string(),
                r.case.name().into(),
                r.s.to_string(),
                r.epsilon.to_string(),
                r.delta.to_string(),
                r.summary.sup_f_plus.to_string(),
                r.summary.sup_f_minus.to_string(),
                r.summary.sup_f_tilde.to_string(),
            ]
        }),
    )?;
    Ok(vec![
        (ERROR_VS_T, error_vs_t),
        (ERROR_VS_DELTA, error_vs_delta),
        (RESIDUAL_VS_DELTA, residual_vs_delta),
    ])
}

/// Summary keyed by criterion ID; criteria without data are `not_evaluated`.
pub fn summary_json(
    records: &[RunRecord],
    checks: &[CheckOutcome],
    config_hash: Option<&str>,
) -> Value {
    let mut map = serde_json::Map::new();
    let mut fits = BTreeMap::new();
    for id in AC_IDS {
        let entry = match checks.iter().find(|c| c.id == id) {
            Some(c) => {
                for (name, fit) in &c.fits {
                    fits.insert(format!("{id}/{name}"), fit.clone());
                }
                json!({
                    "status": if c.passed { "pass" } else { "fail" },
                    "detail": c.detail,
                    "metrics": c.metrics,
                })
            }
            None => json!({ "status": "not_evaluated" }),
        };
        map.insert(id.to_string(), entry);
    }
    map.insert("fits".into(), json!(fits));
    let failed: Vec<Value> = records
        .iter()
        .filter_map(|r| match &r.status {
            RunStatus::Failed { reason } => Some(json!({ "index": r.index, "reason": reason })),
            RunStatus::Completed => None,
        })
        .collect();
    map.insert(
        "meta".into(),
        json!({
            "config_hash": config_hash,
            "runs": records.len(),
            "failed_runs": failed,
            "all_evaluated_pass": checks.iter().all(|c| c.passed),
        }),
    );
    Value::Object(map)
}

/// Everything needed to re-emit a report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredStudy {
    pub config: Option<ExperimentConfig>,
    pub records: Vec<RunRecord>,
    #[serde(default)]
    pub checks: Vec<CheckOutcome>,
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

/// Write every report file into `dir`; returns the written paths.
pub fn emit_report(
    config: Option<&ExperimentConfig>,
    records: &[RunRecord],
    checks: &[CheckOutcome],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = vec![write(dir, RECORDS_CSV, &records_csv(records)?)?];
    let hash = config.map(ExperimentConfig::hash);
    let summary = summary_json(records, checks, hash.as_deref());
    written.push(write(
        dir,
        SUMMARY_JSON,
        &serde_json::to_vec_pretty(&summary)?,
    )?);
    for (name, bytes) in plot_data(records)? {
        written.push(write(dir, name, &bytes)?);
    }
    let stored = StoredStudy {
        config: config.cloned(),
        records: records.to_vec(),
        checks: checks.to_vec(),
    };
    written.push(write(dir, RECORDS_JSON, &serde_json::to_vec(&stored)?)?);
    Ok(written)
}

pub fn load_stored(dir: &Path) -> Result<StoredStudy> {
    let path = dir.join(RECORDS_JSON);
    let text = fs::read_to_string(&path).map_err(|e| LabError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
