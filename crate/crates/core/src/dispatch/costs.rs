use serde::{Deserialize, Serialize};

use super::{DispatchDecision, Frr, SECONDS_PER_HOUR};
use crate::grid::{GeneratorSpec, GridCase};
use crate::signal_stats::IntervalStats;

/// Cost components in $.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub degradation: f64,
    pub generation: f64,
    pub mileage: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.degradation + self.generation + self.mileage
    }

    pub fn add(&mut self, other: &CostBreakdown) {
        self.degradation += other.degradation;
        self.generation += other.generation;
        self.mileage += other.mileage;
    }
}

/// Generation cost of one generator over an interval of `t_s` seconds, with
/// the regulation energy folded into the average output.
pub fn generation_cost(g: &GeneratorSpec, p_gen: f64, pf: f64, stats: &IntervalStats, t_s: f64) -> f64 {
    let p_avg = p_gen + pf * (stats.e_plus - stats.e_minus) / t_s;
    g.cost_rate(p_avg) * t_s / SECONDS_PER_HOUR
}

/// Realized costs of a decision under per-interval statistics.
pub fn cost_terms(decision: &DispatchDecision, case: &GridCase, stats: &[IntervalStats], t_s: f64) -> CostBreakdown {
    let t_h = t_s / SECONDS_PER_HOUR;
    let mut out = CostBreakdown::default();
    for (n, st) in stats.iter().enumerate().take(decision.horizon()) {
        for (e, s) in case.esses.iter().enumerate() {
            out.degradation += s.degradation_cost * (decision.p_dis[n][e] / s.eta_d + decision.p_chg[n][e] * s.eta_c) * t_h;
        }
        for (g, spec) in case.generators.iter().enumerate() {
            out.generation += generation_cost(spec, decision.p_gen[n][g], decision.pf[n][g], st, t_s);
        }
        for (i, pf) in decision.pf[n].iter().enumerate() {
            out.mileage += Frr::from_index(case, i).mileage_cost(case) * pf * st.mileage;
        }
    }
    out
}
