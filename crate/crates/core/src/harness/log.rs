//! Per-trial logs, their CSV form and run comparison.
//!
//! `log.csv` columns: `j,cost,e_norm2,upsilon_0..upsilon_{m-1},delta,sigma2,alpha_w,alpha_theta`.
//! NOILC logs leave the learner columns at zero. Next to each log, `e_final.csv`
//! and `f_final.csv` hold the last trial's error and feedforward signals.

use crate::acilc::TrialRecord;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("malformed log {path}: {msg}")]
    Malformed { path: String, msg: String },
    #[error("logs are not comparable: {0}")]
    Mismatch(String),
    #[error("log is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Noilc,
    Acilc,
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MethodKind::Noilc => "noilc",
            MethodKind::Acilc => "acilc",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub j: usize,
    pub cost: f64,
    pub e_norm2: f64,
    pub upsilon: Vec<f64>,
    pub delta: f64,
    pub sigma2: f64,
    pub alpha_w: f64,
    pub alpha_theta: f64,
}

impl From<&TrialRecord> for LogRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            j: r.j,
            cost: r.cost,
            e_norm2: r.e_norm2,
            upsilon: r.upsilon.iter().copied().collect(),
            delta: r.delta,
            sigma2: r.sigma2,
            alpha_w: r.alpha_w,
            alpha_theta: r.alpha_theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub method: MethodKind,
    pub seed: Option<u64>,
    pub rows: Vec<LogRow>,
    pub final_error: Option<DVector<f64>>,
    pub final_feedforward: Option<DVector<f64>>,
    pub convergence_margin: Option<f64>,
}

pub fn csv_header(m: usize) -> Vec<String> {
    let mut h: Vec<String> = ["j", "cost", "e_norm2"].iter().map(|s| s.to_string()).collect();
    h.extend((0..m).map(|i| format!("upsilon_{i}")));
    h.extend(["delta", "sigma2", "alpha_w", "alpha_theta"].iter().map(|s| s.to_string()));
    h
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> LogError {
    LogError::Io { path: path.display().to_string(), msg: e.to_string() }
}

fn write_column(path: &Path, header: &str, v: &DVector<f64>) -> Result<(), LogError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record([header]).map_err(|e| io_err(path, e))?;
    for x in v.iter() {
        w.write_record([x.to_string()]).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map(|p| p.join(name)).unwrap_or_else(|| PathBuf::from(name))
}

impl TrialLog {
    pub fn m(&self) -> usize {
        self.rows.first().map(|r| r.upsilon.len()).unwrap_or(0)
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    /// Write `path` and, when available, `e_final.csv` / `f_final.csv` beside it.
    pub fn export_csv(&self, path: &Path) -> Result<(), LogError> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
        }
        let m = self.m();
        let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
        w.write_record(csv_header(m)).map_err(|e| io_err(path, e))?;
        for r in &self.rows {
            let mut rec = vec![r.j.to_string(), r.cost.to_string(), r.e_norm2.to_string()];
            rec.extend(r.upsilon.iter().map(|u| u.to_string()));
            rec.extend([r.delta, r.sigma2, r.alpha_w, r.alpha_theta].iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
        if let Some(e) = &self.final_error {
            write_column(&sibling(path, "e_final.csv"), "e", e)?;
        }
        if let Some(f) = &self.final_feedforward {
            write_column(&sibling(path, "f_final.csv"), "f", f)?;
        }
        Ok(())
    }
}

fn read_column(path: &Path) -> Result<Option<DVector<f64>>, LogError> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut v = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let x: f64 = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|e| LogError::Malformed { path: path.display().to_string(), msg: format!("{e}") })?;
        v.push(x);
    }
    Ok(Some(DVector::from_vec(v)))
}

/// Parse a `log.csv` (and its `e_final.csv` / `f_final.csv` siblings when present).
pub fn read_log(path: &Path, method: MethodKind) -> Result<TrialLog, LogError> {
    let bad = |msg: String| LogError::Malformed { path: path.display().to_string(), msg };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = rdr.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    if header.len() < 7 {
        return Err(bad(format!("expected at least 7 columns, got {}", header.len())));
    }
    let m = header.len() - 7;
    if header != csv_header(m) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let f = |i: usize| -> Result<f64, LogError> {
            rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| bad(format!("column {i}: {e}")))
        };
        let j = rec.get(0).unwrap_or("").parse::<usize>().map_err(|e| bad(format!("column j: {e}")))?;
        rows.push(LogRow {
            j,
            cost: f(1)?,
            e_norm2: f(2)?,
            upsilon: (0..m).map(|i| f(3 + i)).collect::<Result<_, _>>()?,
            delta: f(3 + m)?,
            sigma2: f(4 + m)?,
            alpha_w: f(5 + m)?,
            alpha_theta: f(6 + m)?,
        });
    }
    Ok(TrialLog {
        method,
        seed: None,
        rows,
        final_error: read_column(&sibling(path, "e_final.csv"))?,
        final_feedforward: read_column(&sibling(path, "f_final.csv"))?,
        convergence_margin: None,
    })
}

/// Trial at which a run settles: first `j` with `|c_j - c_final| <= 5% c_final`.
pub const SETTLE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub method: MethodKind,
    pub seed: Option<u64>,
    pub final_cost: f64,
    pub min_cost: f64,
    pub convergence_trial: usize,
    pub final_upsilon: Vec<f64>,
    pub convergence_margin: Option<f64>,
}

impl RunSummary {
    pub fn from_log(log: &TrialLog) -> Result<Self, LogError> {
        let last = log.last().ok_or(LogError::Empty)?;
        let final_cost = last.cost;
        let min_cost = log.rows.iter().map(|r| r.cost).fold(f64::INFINITY, f64::min);
        let convergence_trial = log
            .rows
            .iter()
            .find(|r| (r.cost - final_cost).abs() <= SETTLE_FRACTION * final_cost.abs())
            .map(|r| r.j)
            .unwrap_or(last.j);
        Ok(Self {
            method: log.method,
            seed: log.seed,
            final_cost,
            min_cost,
            convergence_trial,
            final_upsilon: last.upsilon.clone(),
            convergence_margin: log.convergence_margin,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: RunSummary,
    pub b: RunSummary,
    /// `final_cost(b) / final_cost(a)`.
    pub final_cost_ratio: f64,
    /// `upsilon_final(b) - upsilon_final(a)`.
    pub upsilon_delta: Vec<f64>,
    /// `max_k |f_b[k] - f_a[k]|` when both logs carry the final feedforward.
    pub feedforward_max_abs_diff: Option<f64>,
}

pub fn compare_runs(a: &TrialLog, b: &TrialLog) -> Result<Comparison, LogError> {
    let (sa, sb) = (RunSummary::from_log(a)?, RunSummary::from_log(b)?);
    if sa.final_upsilon.len() != sb.final_upsilon.len() {
        return Err(LogError::Mismatch(format!("m = {} vs m = {}", sa.final_upsilon.len(), sb.final_upsilon.len())));
    }
    let feedforward_max_abs_diff = match (&a.final_feedforward, &b.final_feedforward) {
        (Some(fa), Some(fb)) => {
            if fa.len() != fb.len() {
                return Err(LogError::Mismatch(format!("horizon {} vs {}", fa.len(), fb.len())));
            }
            Some((fb - fa).amax())
        }
        _ => None,
    };
    if let (Some(ea), Some(eb)) = (&a.final_error, &b.final_error) {
        if ea.len() != eb.len() {
            return Err(LogError::Mismatch(format!("horizon {} vs {}", ea.len(), eb.len())));
        }
    }
    let final_cost_ratio = if sa.final_cost == sb.final_cost { 1.0 } else { sb.final_cost / sa.final_cost };
    let upsilon_delta = sb.final_upsilon.iter().zip(&sa.final_upsilon).map(|(x, y)| x - y).collect();
    Ok(Comparison { a: sa, b: sb, final_cost_ratio, upsilon_delta, feedforward_max_abs_diff })
}
