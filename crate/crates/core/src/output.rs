//! Plain-text artifacts: CSV tables and JSON run reports.
//!
//! Column schemas:
//!
//! | file            | columns                                                                                      |
//! |-----------------|----------------------------------------------------------------------------------------------|
//! | sweep           | `scheme,axis_value,seed,power_w,iterations,status,min_se_margin,min_snr_margin_db`          |
//! | sweep summary   | `scheme,axis_value,mean_power_w,feasible_seeds,total_seeds`                                  |
//! | heatmap         | `x,y,snr_db`                                                                                 |
//! | convergence     | `draw,iteration,power_w`                                                                     |
//! | run history     | `iteration,power_w,ris_accepted`                                                             |
//!
//! Infeasible or failed cells have `NaN` numeric fields.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::driver::{mean_power, HeatmapPoint, RunReport, Scheme, SweepRow};
use crate::scenario::ScenarioConfig;

pub const SWEEP_COLUMNS: [&str; 8] = [
    "scheme",
    "axis_value",
    "seed",
    "power_w",
    "iterations",
    "status",
    "min_se_margin",
    "min_snr_margin_db",
];
pub const SUMMARY_COLUMNS: [&str; 5] = [
    "scheme",
    "axis_value",
    "mean_power_w",
    "feasible_seeds",
    "total_seeds",
];
pub const HEATMAP_COLUMNS: [&str; 3] = ["x", "y", "snr_db"];
pub const CONVERGENCE_COLUMNS: [&str; 3] = ["draw", "iteration", "power_w"];
pub const HISTORY_COLUMNS: [&str; 3] = ["iteration", "power_w", "ris_accepted"];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_records<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: &[T],
) -> Result<(), OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    write_records(path, &SWEEP_COLUMNS, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub axis_value: f64,
    pub mean_power_w: f64,
    pub feasible_seeds: usize,
    pub total_seeds: usize,
}

/// Mean power per scheme and axis value over feasible seeds.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Scheme, f64)> = Vec::new();
    for r in rows {
        if !keys
            .iter()
            .any(|&(s, v)| s == r.scheme && v == r.axis_value)
        {
            keys.push((r.scheme, r.axis_value));
        }
    }
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.into_iter()
        .map(|(scheme, v)| {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.axis_value == v)
                .collect();
            SummaryRow {
                scheme,
                axis_value: v,
                mean_power_w: mean_power(rows, scheme, v).unwrap_or(f64::NAN),
                feasible_seeds: cell.iter().filter(|r| r.power_w.is_finite()).count(),
                total_seeds: cell.len(),
            }
        })
        .collect()
}

pub fn write_summary_csv(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    write_records(path, &SUMMARY_COLUMNS, &summarize(rows))
}

pub fn write_heatmap_csv(path: &Path, points: &[HeatmapPoint]) -> Result<(), OutputError> {
    write_records(path, &HEATMAP_COLUMNS, points)
}

#[derive(Serialize)]
struct ConvergenceRow {
    draw: usize,
    iteration: usize,
    power_w: f64,
}

pub fn write_convergence_csv(path: &Path, runs: &[RunReport]) -> Result<(), OutputError> {
    let rows: Vec<ConvergenceRow> = runs
        .iter()
        .enumerate()
        .flat_map(|(d, r)| {
            r.power_history
                .iter()
                .enumerate()
                .map(move |(i, &p)| ConvergenceRow {
                    draw: d,
                    iteration: i + 1,
                    power_w: p,
                })
        })
        .collect();
    write_records(path, &CONVERGENCE_COLUMNS, &rows)
}

#[derive(Serialize)]
struct HistoryRow {
    iteration: usize,
    power_w: f64,
    ris_accepted: String,
}

pub fn write_history_csv(path: &Path, report: &RunReport) -> Result<(), OutputError> {
    let rows: Vec<HistoryRow> = report
        .log
        .iter()
        .map(|r| HistoryRow {
            iteration: r.iteration,
            power_w: r.power_w,
            ris_accepted: match &r.ris {
                Some(s) => s.accepted.to_string(),
                None => String::new(),
            },
        })
        .collect();
    write_records(path, &HISTORY_COLUMNS, &rows)
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Structured run report. Only `metadata.generated_unix_s` varies between
/// otherwise identical runs.
pub fn report_json(cfg: &ScenarioConfig, report: &RunReport) -> Value {
    let generated = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let m = &report.metrics;
    let complex_pairs =
        |v: &crate::linalg::CVec| -> Vec<[f64; 2]> { v.iter().map(|z| [z.re, z.im]).collect() };
    json!({
        "metadata": {
            "generated_unix_s": generated,
            "crate_version": env!("CARGO_PKG_VERSION"),
        },
        "scheme": report.scheme,
        "seed": report.seed,
        "config_digest": report.config_digest,
        "stop_reason": report.stop_reason,
        "failure": report.failure,
        "iterations": report.iterations,
        "power_history_w": report.power_history,
        "final_power_w": finite_or_null(report.final_power()),
        "metrics": {
            "total_power_w": m.total_power_w,
            "per_user_se_bps_hz": m.per_user_se_bps_hz,
            "sensing_snr_db": m.sensing_snr_linear.iter().map(|&s| finite_or_null(crate::linalg::linear_to_db(s))).collect::<Vec<_>>(),
            "min_se_margin": finite_or_null(m.min_se_margin),
            "min_snr_margin_db": finite_or_null(m.min_snr_margin_db),
        },
        "thresholds": {
            "r_req_bps_hz": cfg.r_req_bps_hz,
            "gamma_req_db": cfg.gamma_req_db,
        },
        "phases_rad": report.phases.phases(),
        "beamformers": report.beamformers.w.iter().map(complex_pairs).collect::<Vec<_>>(),
        "iterations_log": report.log,
    })
}

pub fn write_report_json(
    path: &Path,
    cfg: &ScenarioConfig,
    report: &RunReport,
) -> Result<(), OutputError> {
    let mut f = File::create(path).map_err(io_err(path))?;
    let text = serde_json::to_string_pretty(&report_json(cfg, report)).expect("report serializes");
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    f.write_all(b"\n").map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheme: Scheme, v: f64, seed: u64, p: f64) -> SweepRow {
        SweepRow {
            scheme,
            axis_value: v,
            seed,
            power_w: p,
            iterations: 1,
            status: "single-solve".into(),
            min_se_margin: 0.0,
            min_snr_margin_db: 0.0,
        }
    }

    #[test]
    fn sweep_csv_has_schema_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_sweep_csv(
            &path,
            &[
                row(Scheme::NoRis, 5.0, 0, 1.5),
                row(Scheme::NoRis, 5.0, 1, f64::NAN),
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "no-ris,5.0,0,1.5,1,single-solve,0.0,0.0"
        );
        assert!(lines.next().unwrap().contains("NaN"));
    }

    #[test]
    fn summary_skips_infeasible_cells() {
        let rows = vec![
            row(Scheme::Proposed, 10.0, 0, 1.0),
            row(Scheme::Proposed, 10.0, 1, 3.0),
            row(Scheme::Proposed, 10.0, 2, f64::NAN),
            row(Scheme::Proposed, 5.0, 0, 0.5),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].axis_value, 5.0);
        assert_eq!(s[1].mean_power_w, 2.0);
        assert_eq!((s[1].feasible_seeds, s[1].total_seeds), (2, 3));
    }

    #[test]
    fn heatmap_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let pts = [HeatmapPoint {
            x: 1.25,
            y: -3.0,
            snr_db: 12.5,
        }];
        write_heatmap_csv(&path, &pts).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(
            r.headers().unwrap().iter().collect::<Vec<_>>(),
            HEATMAP_COLUMNS.to_vec()
        );
        let rec = r.records().next().unwrap().unwrap();
        assert_eq!(rec[0].parse::<f64>().unwrap(), 1.25);
    }
}
