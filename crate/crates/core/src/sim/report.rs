use std::path::Path;

use serde::Serialize;

use super::experiment::SensitivityRow;
use super::rolling::{EvaluationReport, RollStatus};
use crate::error::{Error, Result};

pub fn write_report_json(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut s = serde_json::to_string_pretty(reports)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_report_json(path: &Path) -> Result<Vec<EvaluationReport>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    method: &'a str,
    roll: usize,
    interval: usize,
    status: RollStatus,
    objective: Option<f64>,
    slack: f64,
    generation: f64,
    degradation: f64,
    mileage: f64,
    penalty: f64,
    total: f64,
    max_loss: f64,
}

/// One row per roll and method.
pub fn write_summary_csv(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for rep in reports {
        for r in &rep.records {
            w.serialize(SummaryRow {
                method: rep.method.name(),
                roll: r.roll,
                interval: r.interval,
                status: r.status,
                objective: r.objective,
                slack: r.slack,
                generation: r.costs.generation,
                degradation: r.costs.degradation,
                mileage: r.costs.mileage,
                penalty: r.penalty,
                total: r.total(),
                max_loss: r.losses.iter().map(|l| l.loss).fold(f64::NEG_INFINITY, f64::max),
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct CostRow<'a> {
    method: &'a str,
    rolls: usize,
    held_rolls: usize,
    generation: f64,
    degradation: f64,
    mileage: f64,
    penalty: f64,
    total: f64,
}

/// Stacked cost components, one row per method.
pub fn write_costs_csv(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for rep in reports {
        let t = &rep.totals;
        w.serialize(CostRow {
            method: rep.method.name(),
            rolls: rep.records.len(),
            held_rolls: rep.held_rolls,
            generation: t.generation,
            degradation: t.degradation,
            mileage: t.mileage,
            penalty: t.penalty,
            total: t.total,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sensitivity_csv(path: &Path, rows: &[SensitivityRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
