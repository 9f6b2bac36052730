//! Decision vector, cost terms, deterministic constraints, SOC change and
//! chance-constraint loss coefficients of the real-time dispatch.

mod chance;
mod constraints;
mod costs;
mod soc;
mod vars;

use serde::{Deserialize, Serialize};

pub use chance::{build_chance_terms, chance_losses, ChanceTermSpec, DecisionExprs, FixedDecision, CHANCE_FAMILIES};
pub use constraints::{add_deterministic_rows, deterministic_constraints, Residual, ResidualReport, FEASIBILITY_TOL};
pub use costs::{cost_terms, generation_cost, CostBreakdown};
pub use soc::{certainty_equivalent_soc_change, soc_branches, soc_change, SocBranches};
pub use vars::{DecisionVars, PfMode};

use crate::grid::GridCase;

/// Seconds per hour, for $/MWh and $/h rates applied to second-based spans.
pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Index of a frequency-regulation resource: generators first, then ESSs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frr {
    Gen(usize),
    Ess(usize),
}

impl Frr {
    pub fn from_index(case: &GridCase, i: usize) -> Frr {
        let g = case.generators.len();
        if i < g {
            Frr::Gen(i)
        } else {
            Frr::Ess(i - g)
        }
    }

    /// (p_min, p_max, ramp) of the resource's net output.
    pub fn limits(self, case: &GridCase) -> (f64, f64, f64) {
        match self {
            Frr::Gen(g) => {
                let s = &case.generators[g];
                (s.p_min, s.p_max, s.ramp)
            }
            Frr::Ess(e) => {
                let s = &case.esses[e];
                (-s.p_cap, s.p_cap, s.ramp)
            }
        }
    }

    pub fn mileage_cost(self, case: &GridCase) -> f64 {
        match self {
            Frr::Gen(g) => case.generators[g].mileage_cost,
            Frr::Ess(e) => case.esses[e].mileage_cost,
        }
    }
}

/// Dispatch over a horizon, indexed `[interval][resource]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DispatchDecision {
    pub p_gen: Vec<Vec<f64>>,
    pub p_dis: Vec<Vec<f64>>,
    pub p_chg: Vec<Vec<f64>>,
    /// Participation factors over all FRRs (generators then ESSs).
    pub pf: Vec<Vec<f64>>,
}

impl DispatchDecision {
    pub fn horizon(&self) -> usize {
        self.p_gen.len()
    }

    /// Net output of every FRR at interval `n`.
    pub fn frr_power(&self, n: usize) -> Vec<f64> {
        let mut out = self.p_gen[n].clone();
        out.extend(self.p_dis[n].iter().zip(&self.p_chg[n]).map(|(d, c)| d - c));
        out
    }

    /// Keep only interval `n`.
    pub fn interval(&self, n: usize) -> DispatchDecision {
        DispatchDecision {
            p_gen: vec![self.p_gen[n].clone()],
            p_dis: vec![self.p_dis[n].clone()],
            p_chg: vec![self.p_chg[n].clone()],
            pf: vec![self.pf[n].clone()],
        }
    }

    /// Largest simultaneous charge/discharge, MW.
    pub fn simultaneous_charge_discharge(&self) -> f64 {
        self.p_dis.iter().zip(&self.p_chg).flat_map(|(d, c)| d.iter().zip(c).map(|(a, b)| a.min(*b))).fold(0.0, f64::max)
    }
}

/// Net output of every FRR just before the horizon; anchors the first ramp.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Anchor {
    pub power: Vec<f64>,
}

impl Anchor {
    pub fn from_decision(d: &DispatchDecision, n: usize) -> Self {
        Self { power: d.frr_power(n) }
    }
}
