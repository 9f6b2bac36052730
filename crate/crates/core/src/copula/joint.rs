use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::family::{CopulaSpec, Family};
use super::fit::{select_by_bic, Candidate, FitReport};
use super::marginal::{fit_marginal, pseudo_observations, MarginalModel};
use crate::error::{Error, Result};
use crate::par::{map_range, Exec};
use crate::signal_stats::{IntervalStats, PowerVariation, XI_DIM};

/// ξ components followed by the three forecast variations.
pub const JOINT_DIM: usize = XI_DIM + 3;

pub const JOINT_COLUMNS: [&str; JOINT_DIM] =
    ["e_plus", "e_minus", "mileage", "ma_plus", "ma_minus", "rr_plus", "rr_minus", "d_load", "d_pv", "d_wind"];

/// Neighbours used when the selected copula has no closed-form conditional.
pub const KNN_NEIGHBOURS: usize = 200;

const FORMAT: &str = "rted-dro/joint-model";

/// One training observation: an interval's ξ and the forecast change over it.
pub type TrainingRow = [f64; JOINT_DIM];

pub fn training_row(stats: &IntervalStats, dp: &PowerVariation) -> TrainingRow {
    let xi = stats.xi();
    let p = dp.as_array();
    std::array::from_fn(|c| if c < XI_DIM { xi[c] } else { p[c - XI_DIM] })
}

/// Marginals, the BIC-selected copula over `(ξ, ΔP)`, the losing candidates,
/// and the training rows (kept for the nearest-neighbour fallback).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedJointModel {
    pub format: String,
    pub columns: Vec<String>,
    pub marginals: Vec<MarginalModel>,
    pub copula: CopulaSpec,
    pub report: FitReport,
    pub candidates: Vec<Candidate>,
    pub training: Vec<TrainingRow>,
}

/// Fit marginals and select the copula family by BIC.
pub fn fit_joint(rows: &[TrainingRow], exec: Exec) -> Result<FittedJointModel> {
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::input(format!("training row {} has a non-finite value", i + 1)));
    }
    let marginals = map_range(exec, JOINT_DIM, |c| fit_marginal(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let data: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let u = pseudo_observations(&data);
    let (candidates, best) = select_by_bic(&u, exec)?;
    let winner = candidates[best].clone();
    if !winner.spec.family.is_elliptical() {
        log::warn!(
            "{} copula selected; it has no closed-form conditional, so sampling will resample the {KNN_NEIGHBOURS} nearest training rows",
            winner.spec.family
        );
    }
    Ok(FittedJointModel {
        format: FORMAT.into(),
        columns: JOINT_COLUMNS.iter().map(|s| s.to_string()).collect(),
        marginals,
        copula: winner.spec,
        report: winner.report,
        candidates,
        training: rows.to_vec(),
    })
}

impl FittedJointModel {
    pub fn family(&self) -> Family {
        self.copula.family
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: FittedJointModel = serde_json::from_str(text)?;
        if m.format != FORMAT {
            return Err(Error::input(format!("not a joint model document (format {:?})", m.format)));
        }
        if m.marginals.len() != JOINT_DIM || m.copula.dim != JOINT_DIM {
            return Err(Error::input(format!("joint model must have {JOINT_DIM} dimensions")));
        }
        if m.marginals.iter().any(|mm| mm.is_empty() || mm.support.windows(2).any(|w| !(w[0] < w[1]))) {
            return Err(Error::input("marginal support must be non-empty and strictly increasing"));
        }
        m.copula.prepare()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Draw `count` interval statistics conditional on the forecast change
    /// `condition`. Elliptical copulas condition in closed form; otherwise the
    /// nearest training rows by standardised ΔP are resampled.
    pub fn conditional_sample(&self, condition: &PowerVariation, count: usize, seed: u64) -> Result<Vec<IntervalStats>> {
        let cond = condition.as_array();
        if cond.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("conditioning forecast change must be finite"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xis: Vec<[f64; XI_DIM]> = if self.copula.family.is_elliptical() {
            let c = self.copula.prepare()?;
            let given: Vec<f64> = cond.iter().enumerate().map(|(k, &v)| self.marginals[XI_DIM + k].cdf(v)).collect();
            c.conditional_sample(&given, count, &mut rng)?
                .into_iter()
                .map(|u| std::array::from_fn(|j| self.marginals[j].inverse_cdf(u[j]).max(0.0)))
                .collect()
        } else {
            log::debug!("{} copula: resampling the {KNN_NEIGHBOURS} nearest training rows", self.copula.family);
            self.knn_sample(&cond, count, &mut rng)?
        };
        Ok(xis.iter().map(|xi| IntervalStats::from_xi(xi, 0.0)).collect())
    }

    fn knn_sample(&self, cond: &[f64; 3], count: usize, rng: &mut impl Rng) -> Result<Vec<[f64; XI_DIM]>> {
        if self.training.is_empty() {
            return Err(Error::input("model carries no training rows for neighbour resampling"));
        }
        let n = self.training.len() as f64;
        let scale: Vec<f64> = (0..3)
            .map(|k| {
                let col = self.training.iter().map(|r| r[XI_DIM + k]);
                let mean = col.clone().sum::<f64>() / n;
                let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .training
            .iter()
            .enumerate()
            .map(|(i, r)| ((0..3).map(|k| ((r[XI_DIM + k] - cond[k]) / scale[k]).powi(2)).sum::<f64>(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = KNN_NEIGHBOURS.min(dist.len());
        Ok((0..count)
            .map(|_| {
                let row = &self.training[dist[rng.random_range(0..k)].1];
                std::array::from_fn(|j| row[j].max(0.0))
            })
            .collect())
    }
}

/// Read an n×10 training matrix with the header of [`JOINT_COLUMNS`].
pub fn read_training_csv(path: &Path) -> Result<Vec<TrainingRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != JOINT_COLUMNS {
        return Err(Error::input(format!("{}: expected header {}, found {}", path.display(), JOINT_COLUMNS.join(","), header.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; JOINT_DIM];
        for (c, field) in rec.iter().enumerate().take(JOINT_DIM) {
            row[c] = field.trim().parse().map_err(|_| Error::input(format!("{}: line {}: bad number {field:?}", path.display(), i + 2)))?;
        }
        if rec.len() != JOINT_DIM {
            return Err(Error::input(format!("{}: line {}: expected {JOINT_DIM} fields", path.display(), i + 2)));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_training_csv(path: &Path, rows: &[TrainingRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(JOINT_COLUMNS)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
