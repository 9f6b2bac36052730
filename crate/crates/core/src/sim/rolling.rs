use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::synth::Streams;
use crate::copula::FittedJointModel;
use crate::dispatch::{chance_losses, cost_terms, soc_change, Anchor, CostBreakdown, DispatchDecision, Frr};
use crate::dro::{solve_rted_checked, unramped_dispatch, AmbiguitySet, Formulation, RtedInputs};
use crate::error::{Error, Result};
use crate::grid::{ForecastSet, GridCase, GridModel};
use crate::lp::LpBackend;
use crate::par::{map_range, Exec};
use crate::signal_stats::{split_into_intervals, IntervalStats, StatConfig, XI_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dro,
    Robust,
    Traditional,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dro, Method::Robust, Method::Traditional];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dro => "dro",
            Method::Robust => "robust",
            Method::Traditional => "traditional",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::input(format!("unknown method `{s}` (expected dro, robust or traditional)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RollingConfig {
    pub t_s: f64,
    pub horizon: usize,
    /// Conditional samples per look-ahead interval.
    pub samples: usize,
    /// Wasserstein radius.
    pub epsilon: f64,
    /// Measure ε in per-component sample standard deviations.
    pub standardize: bool,
    pub beta: f64,
    /// Weight of the chance-constraint CVaR in the objective and of realized violations.
    pub rho: f64,
    pub method: Method,
    pub seed: u64,
    pub alpha_ma: f64,
    pub alpha_rr: f64,
    /// First interval dispatched.
    pub start: usize,
    /// Number of rolls; all that fit in the streams when absent.
    pub rolls: Option<usize>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            t_s: 300.0,
            horizon: 6,
            samples: 30,
            epsilon: 0.05,
            standardize: true,
            beta: 0.95,
            rho: 15.0,
            method: Method::Dro,
            seed: 0,
            alpha_ma: 0.7,
            alpha_rr: 0.7,
            start: 0,
            rolls: None,
            exec: Exec::Parallel,
        }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::input("horizon must be at least 1"));
        }
        if self.samples < 1 {
            return Err(Error::input("sample count must be at least 1"));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::input(format!("rho must be finite and non-negative, got {}", self.rho)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::input(format!("epsilon must be finite and non-negative, got {}", self.epsilon)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::input(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.t_s > 0.0) {
            return Err(Error::input("T must be positive"));
        }
        Ok(())
    }

    pub fn stat_config(&self, tau_s: f64) -> StatConfig {
        StatConfig { tau_s, t_s: self.t_s, alpha_ma: self.alpha_ma, alpha_rr: self.alpha_rr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RollStatus {
    Solved,
    /// Robust roll solved only after relaxing its hard rows.
    Relaxed,
    /// No solution; the previous dispatch was kept.
    Held,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub j: usize,
    /// FRR index, generators then ESSs.
    pub resource: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollRecord {
    pub roll: usize,
    pub interval: usize,
    pub status: RollStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub objective: Option<f64>,
    pub slack: f64,
    pub max_violation: f64,
    pub decision: DispatchDecision,
    pub realized: IntervalStats,
    pub costs: CostBreakdown,
    pub losses: Vec<LossRecord>,
    pub penalty: f64,
    /// Realized SOC after the interval, per ESS.
    pub soc: Vec<f64>,
}

impl RollRecord {
    pub fn total(&self) -> f64 {
        self.costs.total() + self.penalty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub generation: f64,
    pub degradation: f64,
    pub mileage: f64,
    pub penalty: f64,
    pub total: f64,
}

impl Totals {
    pub fn of(records: &[RollRecord]) -> Self {
        let mut t = Totals::default();
        for r in records {
            t.generation += r.costs.generation;
            t.degradation += r.costs.degradation;
            t.mileage += r.costs.mileage;
            t.penalty += r.penalty;
        }
        t.total = t.generation + t.degradation + t.mileage + t.penalty;
        t
    }

    /// Componentwise mean of several runs.
    pub fn mean(all: &[Totals]) -> Self {
        let k = all.len().max(1) as f64;
        let mut t = Totals::default();
        for x in all {
            t.generation += x.generation / k;
            t.degradation += x.degradation / k;
            t.mileage += x.mileage / k;
            t.penalty += x.penalty / k;
        }
        t.total = t.generation + t.degradation + t.mileage + t.penalty;
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: Method,
    pub config: RollingConfig,
    pub records: Vec<RollRecord>,
    pub totals: Totals,
    pub held_rolls: usize,
}

/// Point forecast of ξ for the robust baseline.
pub trait Forecaster: Sync {
    /// `history` holds the realized statistics of every interval before the
    /// first look-ahead interval, oldest first.
    fn forecast(&self, history: &[IntervalStats], horizon: usize) -> Vec<[f64; XI_DIM]>;
}

/// Repeats the last realized statistics over the whole horizon.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn forecast(&self, history: &[IntervalStats], horizon: usize) -> Vec<[f64; XI_DIM]> {
        let last = history.last().map_or([0.0; XI_DIM], IntervalStats::xi);
        vec![last; horizon]
    }
}

/// Participation in proportion to regulation capacity
/// `min(p_max − p_min, rr · T)`. The last factor closes the sum to one.
pub fn traditional_participation(case: &GridCase, t_s: f64) -> Result<Vec<f64>> {
    let caps: Vec<f64> = (0..case.frr_count())
        .map(|i| {
            let (lo, hi, rr) = Frr::from_index(case, i).limits(case);
            (hi - lo).min(rr * t_s).max(0.0)
        })
        .collect();
    let total: f64 = caps.iter().sum();
    if !(total > 0.0) {
        return Err(Error::input("total regulation capacity is zero"));
    }
    let mut pf: Vec<f64> = caps.iter().map(|c| c / total).collect();
    let head: f64 = pf[..pf.len() - 1].iter().sum();
    *pf.last_mut().expect("at least one FRR") = 1.0 - head;
    Ok(pf)
}

/// Realized outcome of running `decision` (one interval) through `stats`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedInterval {
    pub costs: CostBreakdown,
    pub losses: Vec<LossRecord>,
    pub penalty: f64,
    /// SOC after the interval, clamped to `[0, 1]`.
    pub soc: Vec<f64>,
}

/// Score one adopted interval. SOC rows use the exact piecewise SOC change
/// (before clamping), so excursions past the limits show up as losses.
pub fn evaluate_interval(
    case: &GridCase,
    decision: &DispatchDecision,
    prev_power: &[f64],
    soc_prev: &[f64],
    stats: &IntervalStats,
    t_s: f64,
    rho: f64,
) -> RealizedInterval {
    let costs = cost_terms(decision, case, std::slice::from_ref(stats), t_s);
    let g = case.generators.len();
    let raw: Vec<f64> = case
        .esses
        .iter()
        .enumerate()
        .map(|(e, s)| soc_prev[e] - soc_change(decision.p_dis[0][e], decision.p_chg[0][e], decision.pf[0][g + e], stats, s, t_s))
        .collect();
    let losses: Vec<LossRecord> = chance_losses(decision, case, 0, prev_power, soc_prev, &stats.xi(), t_s)
        .into_iter()
        .map(|(j, resource, loss)| {
            let loss = match j {
                7 => raw[resource - g] - case.esses[resource - g].soc_max,
                8 => case.esses[resource - g].soc_min - raw[resource - g],
                _ => loss,
            };
            LossRecord { j, resource, loss }
        })
        .collect();
    let penalty = rho * losses.iter().map(|l| l.loss.max(0.0)).sum::<f64>();
    RealizedInterval { costs, losses, penalty, soc: raw.iter().map(|s| s.clamp(0.0, 1.0)).collect() }
}

fn sample_seed(seed: u64, interval: usize, n: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((interval as u64) << 16) | n as u64);
    rng.random()
}

/// Intervals available for rolling in `streams` with look-ahead `horizon`.
pub fn max_rolls(streams: &Streams, start: usize, horizon: usize) -> usize {
    (streams.intervals() + 1).saturating_sub(start + horizon)
}

/// Rolling-horizon run with the persistence forecaster for the robust method.
pub fn run_rolling(
    grid: &GridModel,
    streams: &Streams,
    model: Option<&FittedJointModel>,
    cfg: &RollingConfig,
    backend: &dyn LpBackend,
) -> Result<EvaluationReport> {
    run_rolling_with(grid, streams, model, cfg, backend, &Persistence)
}

/// Everything one roll's LP needs besides the grid.
#[derive(Debug, Clone)]
pub struct RollSetup {
    pub interval: usize,
    pub forecasts: ForecastSet,
    pub sets: Vec<AmbiguitySet>,
    pub formulation: Formulation,
    pub anchor: Anchor,
    pub soc: Vec<f64>,
}

impl RollSetup {
    pub fn inputs<'a>(&'a self, grid: &'a GridModel, t_s: f64) -> RtedInputs<'a> {
        RtedInputs { grid, forecasts: &self.forecasts, anchor: &self.anchor, soc0: &self.soc, sets: &self.sets, t_s }
    }
}

struct Runner<'a> {
    grid: &'a GridModel,
    streams: &'a Streams,
    model: Option<&'a FittedJointModel>,
    cfg: &'a RollingConfig,
    forecaster: &'a dyn Forecaster,
    stats: Vec<IntervalStats>,
    pf_trad: Vec<f64>,
    rolls: usize,
}

impl<'a> Runner<'a> {
    fn new(
        grid: &'a GridModel,
        streams: &'a Streams,
        model: Option<&'a FittedJointModel>,
        cfg: &'a RollingConfig,
        forecaster: &'a dyn Forecaster,
    ) -> Result<Self> {
        cfg.validate()?;
        let stats = split_into_intervals(&streams.agc, &cfg.stat_config(streams.agc.tau))?;
        if stats.len() < streams.intervals() {
            return Err(Error::input(format!("AGC stream covers {} intervals, forecasts cover {}", stats.len(), streams.intervals())));
        }
        let available = max_rolls(streams, cfg.start, cfg.horizon);
        let rolls = cfg.rolls.unwrap_or(available);
        if rolls == 0 || rolls > available {
            return Err(Error::input(format!(
                "streams support {available} rolls from interval {} with horizon {}, requested {rolls}",
                cfg.start, cfg.horizon
            )));
        }
        if cfg.method == Method::Dro && model.is_none() {
            return Err(Error::input("the DRO method needs a fitted joint model"));
        }
        if let Some(m) = model.filter(|m| cfg.method == Method::Dro && !m.family().is_elliptical()) {
            log::warn!("{} copula model: scenarios come from nearest-neighbour resampling of training rows", m.family());
        }
        let pf_trad = traditional_participation(&grid.case, cfg.t_s)?;
        Ok(Self { grid, streams, model, cfg, forecaster, stats, pf_trad, rolls })
    }

    /// Dispatch placing resources at the first interval, ignoring ramps.
    fn initial(&self, backend: &dyn LpBackend) -> Result<(DispatchDecision, Vec<f64>)> {
        let soc: Vec<f64> = self.grid.case.esses.iter().map(|e| e.soc_init).collect();
        let first = self.grid.case.distribute(&self.streams.forecasts.points[self.cfg.start..=self.cfg.start]);
        let d = unramped_dispatch(self.grid, &first, &soc, &self.pf_trad, self.cfg.t_s, backend)?.decision;
        Ok((d, soc))
    }

    fn setup(&self, t: usize, anchor: Anchor, soc: Vec<f64>) -> Result<RollSetup> {
        let cfg = self.cfg;
        let forecasts = self.grid.case.distribute(&self.streams.forecasts.points[t..t + cfg.horizon]);
        let (sets, formulation) = match cfg.method {
            Method::Dro => {
                let m = self.model.expect("checked in Runner::new");
                let drawn = map_range(cfg.exec, cfg.horizon, |n| {
                    let dp = self.streams.forecasts.variation(t + n)?;
                    let xs = m.conditional_sample(&dp, cfg.samples, sample_seed(cfg.seed, t, n))?;
                    Ok(AmbiguitySet::new(xs.iter().map(IntervalStats::xi).collect(), cfg.epsilon))
                });
                let sets = drawn.into_iter().collect::<Result<Vec<_>>>()?;
                (sets, Formulation::Dro { rho: cfg.rho, beta: cfg.beta, standardize: cfg.standardize, hard: false })
            }
            Method::Robust => {
                let points = self.forecaster.forecast(&self.stats[..t], cfg.horizon);
                (points.into_iter().map(|p| AmbiguitySet::new(vec![p], 0.0)).collect(), Formulation::Robust { slack: 0.0 })
            }
            Method::Traditional => (
                (0..cfg.horizon).map(|_| AmbiguitySet::new(vec![[0.0; XI_DIM]], 0.0)).collect(),
                Formulation::Traditional { pf: vec![self.pf_trad.clone(); cfg.horizon] },
            ),
        };
        Ok(RollSetup { interval: t, forecasts, sets, formulation, anchor, soc })
    }
}

/// The LP inputs of the first roll of `cfg`, from the initial state.
pub fn first_roll(
    grid: &GridModel,
    streams: &Streams,
    model: Option<&FittedJointModel>,
    cfg: &RollingConfig,
    backend: &dyn LpBackend,
) -> Result<RollSetup> {
    let runner = Runner::new(grid, streams, model, cfg, &Persistence)?;
    let (d, soc) = runner.initial(backend)?;
    runner.setup(cfg.start, Anchor::from_decision(&d, 0), soc)
}

pub fn run_rolling_with(
    grid: &GridModel,
    streams: &Streams,
    model: Option<&FittedJointModel>,
    cfg: &RollingConfig,
    backend: &dyn LpBackend,
    forecaster: &dyn Forecaster,
) -> Result<EvaluationReport> {
    let runner = Runner::new(grid, streams, model, cfg, forecaster)?;
    let case = &grid.case;
    let (mut held, mut soc) = runner.initial(backend)?;
    let mut anchor = Anchor::from_decision(&held, 0);
    let mut records = Vec::with_capacity(runner.rolls);

    for roll in 0..runner.rolls {
        let t = cfg.start + roll;
        let setup = runner.setup(t, anchor.clone(), soc.clone())?;
        let (status, note, objective, slack, max_violation) =
            match solve_rted_checked(&setup.inputs(grid, cfg.t_s), &setup.formulation, backend) {
                Ok((sol, viol)) => {
                    held = sol.decision.interval(0);
                    let status = if sol.slack > 0.0 { RollStatus::Relaxed } else { RollStatus::Solved };
                    (status, None, Some(sol.objective), sol.slack, viol)
                }
                Err(Error::Lp(e)) => {
                    log::warn!("roll {roll} (interval {t}): {e}; holding the previous dispatch");
                    (RollStatus::Held, Some(e.to_string()), None, 0.0, 0.0)
                }
                Err(e) => return Err(e),
            };
        let st = runner.stats[t];
        let realized = evaluate_interval(case, &held, &anchor.power, &soc, &st, cfg.t_s, cfg.rho);
        soc.clone_from(&realized.soc);
        anchor = Anchor::from_decision(&held, 0);
        records.push(RollRecord {
            roll,
            interval: t,
            status,
            note,
            objective,
            slack,
            max_violation,
            decision: held.clone(),
            realized: st,
            costs: realized.costs,
            losses: realized.losses,
            penalty: realized.penalty,
            soc: realized.soc,
        });
    }
    let totals = Totals::of(&records);
    let held_rolls = records.iter().filter(|r| r.status == RollStatus::Held).count();
    Ok(EvaluationReport { method: cfg.method, config: cfg.clone(), records, totals, held_rolls })
}
