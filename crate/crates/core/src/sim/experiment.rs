use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rolling::{run_rolling, EvaluationReport, Method, RollingConfig, Totals};
use super::synth::{synthesize_data, Streams, SynthConfig};
use crate::copula::{fit_joint, training_row, FittedJointModel, TrainingRow};
use crate::error::{Error, Result};
use crate::grid::GridModel;
use crate::lp::LpBackend;
use crate::par::{map_slice, Exec};
use crate::signal_stats::{split_into_intervals, StatConfig};

/// Training rows `(ξ_n, ΔP_n)` for the intervals in `range`.
pub fn training_rows(streams: &Streams, stat: &StatConfig, range: Range<usize>) -> Result<Vec<TrainingRow>> {
    let stats = split_into_intervals(&streams.agc, stat)?;
    if range.end > stats.len().min(streams.intervals()) {
        return Err(Error::input(format!("training span ends at {} but the streams cover {} intervals", range.end, streams.intervals())));
    }
    range.map(|n| Ok(training_row(&stats[n], &streams.forecasts.variation(n)?))).collect()
}

/// Layout of a synthetic experiment: `[train | validation | test]` followed
/// by the look-ahead tail of the last test roll.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub train_intervals: usize,
    pub validation_rolls: usize,
    pub test_rolls: usize,
    pub rolling: RollingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            train_intervals: 576,
            validation_rolls: 12,
            test_rolls: 24,
            rolling: RollingConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn total_intervals(&self) -> usize {
        self.train_intervals + self.validation_rolls + self.test_rolls + self.rolling.horizon
    }

    pub fn validation_start(&self) -> usize {
        self.train_intervals
    }

    pub fn test_start(&self) -> usize {
        self.train_intervals + self.validation_rolls
    }
}

/// Synthetic streams for one seed and the joint model fitted on their training span.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seed: u64,
    pub streams: Streams,
    pub model: FittedJointModel,
}

pub fn prepare(exp: &ExperimentConfig, seed: u64, exec: Exec) -> Result<Prepared> {
    let synth = SynthConfig { intervals: exp.total_intervals(), t_s: exp.rolling.t_s, ..exp.synth.clone() };
    let streams = synthesize_data(&synth, seed)?;
    let rows = training_rows(&streams, &exp.rolling.stat_config(synth.tau_s), 0..exp.train_intervals)?;
    let model = fit_joint(&rows, exec)?;
    Ok(Prepared { seed, streams, model })
}

/// Run `cfg` over the test span of a prepared experiment.
pub fn run_test(
    grid: &GridModel,
    exp: &ExperimentConfig,
    p: &Prepared,
    cfg: &RollingConfig,
    backend: &dyn LpBackend,
) -> Result<EvaluationReport> {
    let cfg = RollingConfig { start: exp.test_start(), rolls: Some(exp.test_rolls), seed: p.seed, ..cfg.clone() };
    run_rolling(grid, &p.streams, Some(&p.model), &cfg, backend)
}

/// One pass over `candidates` on the validation span; returns the radius
/// with the lowest realized total and every candidate's total.
pub fn select_epsilon(
    grid: &GridModel,
    exp: &ExperimentConfig,
    p: &Prepared,
    candidates: &[f64],
    backend: &dyn LpBackend,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if candidates.is_empty() || exp.validation_rolls == 0 {
        return Err(Error::input("epsilon selection needs candidates and a validation span"));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for &eps in candidates {
        let cfg = RollingConfig {
            epsilon: eps,
            method: Method::Dro,
            start: exp.validation_start(),
            rolls: Some(exp.validation_rolls),
            seed: p.seed,
            ..exp.rolling.clone()
        };
        let r = run_rolling(grid, &p.streams, Some(&p.model), &cfg, backend)?;
        scores.push((eps, r.totals.total));
    }
    let best = scores.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|s| s.0).expect("non-empty");
    Ok((best, scores))
}

/// Run all three methods on the same streams.
pub fn compare_methods(
    grid: &GridModel,
    streams: &Streams,
    model: Option<&FittedJointModel>,
    cfg: &RollingConfig,
    backend: &dyn LpBackend,
) -> Result<Vec<EvaluationReport>> {
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| *m != Method::Dro || model.is_some()).collect();
    map_slice(cfg.exec, &methods, |&m| run_rolling(grid, streams, model, &RollingConfig { method: m, ..cfg.clone() }, backend))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Rho,
    Samples,
    Epsilon,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Rho => "rho",
            SweepParameter::Samples => "samples",
            SweepParameter::Epsilon => "epsilon",
        })
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rho" => Ok(SweepParameter::Rho),
            "samples" | "y" => Ok(SweepParameter::Samples),
            "epsilon" | "eps" => Ok(SweepParameter::Epsilon),
            _ => Err(Error::input(format!("unknown sweep parameter `{s}` (expected rho, samples or epsilon)"))),
        }
    }
}

impl SweepParameter {
    pub fn apply(self, cfg: &RollingConfig, value: f64) -> Result<RollingConfig> {
        let mut c = cfg.clone();
        match self {
            SweepParameter::Rho => c.rho = value,
            SweepParameter::Epsilon => c.epsilon = value,
            SweepParameter::Samples => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::input(format!("sample count must be a positive integer, got {value}")));
                }
                c.samples = value as usize;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// Seed-averaged totals of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub parameter: SweepParameter,
    pub value: f64,
    pub method: Method,
    pub seeds: usize,
    pub generation: f64,
    pub degradation: f64,
    pub mileage: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Per-seed outcome of a sweep, kept for paired comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SensitivityRow>,
    /// `per_seed[v][s]`: totals at value `v` for seed `s`.
    pub per_seed: Vec<Vec<Totals>>,
}

/// Vary one parameter of the DRO run over `values` on every seed's test span.
/// Seeds run concurrently; each seed's streams and model are shared by all values.
pub fn sweep(
    grid: &GridModel,
    exp: &ExperimentConfig,
    parameter: SweepParameter,
    values: &[f64],
    seeds: &[u64],
    backend: &dyn LpBackend,
) -> Result<SweepResult> {
    let configs = values.iter().map(|&v| parameter.apply(&exp.rolling, v)).collect::<Result<Vec<_>>>()?;
    let per_seed = map_slice(exp.rolling.exec, seeds, |&seed| -> Result<Vec<Totals>> {
        let p = prepare(exp, seed, Exec::Sequential)?;
        configs
            .iter()
            .map(|c| run_test(grid, exp, &p, &RollingConfig { exec: Exec::Sequential, ..c.clone() }, backend).map(|r| r.totals))
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let by_value: Vec<Vec<Totals>> = (0..values.len()).map(|v| per_seed.iter().map(|s| s[v]).collect()).collect();
    let rows = values
        .iter()
        .zip(&by_value)
        .map(|(&value, totals)| {
            let m = Totals::mean(totals);
            SensitivityRow {
                parameter,
                value,
                method: exp.rolling.method,
                seeds: seeds.len(),
                generation: m.generation,
                degradation: m.degradation,
                mileage: m.mileage,
                penalty: m.penalty,
                total: m.total,
            }
        })
        .collect();
    Ok(SweepResult { rows, per_seed: by_value })
}
