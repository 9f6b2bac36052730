use serde::{Deserialize, Serialize};

use super::{Anchor, DecisionExprs, DecisionVars, DispatchDecision, FixedDecision, Frr};
use crate::grid::{ForecastSet, GridModel};
use crate::lp::{LinExpr, LpBuilder, LpError, RowSense};

/// A decision is feasible when no residual exceeds this, in MW (or 1 for PF).
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Signed residual of one constraint: positive means violated by that amount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<Residual>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn feasible(&self) -> bool {
        self.max() <= FEASIBILITY_TOL
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }

    /// Violations above the tolerance.
    pub fn violations(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| r.value > FEASIBILITY_TOL)
    }
}

/// Net injection per bus (0-based) at interval `n` as affine expressions.
fn injections(src: &impl DecisionExprs, grid: &GridModel, fc: &ForecastSet, n: usize) -> Vec<LinExpr> {
    let case = &grid.case;
    let mut inj: Vec<LinExpr> = fc.load[n].iter().map(|l| LinExpr::constant(-l)).collect();
    for (g, s) in case.generators.iter().enumerate() {
        inj[s.bus - 1] += &src.pg(g, n);
    }
    for (e, s) in case.esses.iter().enumerate() {
        inj[s.bus - 1] += &(src.pd(e, n) - src.pc(e, n));
    }
    for (r, s) in case.renewables.iter().enumerate() {
        inj[s.bus - 1].constant += fc.renewable[n][r];
    }
    inj
}

fn line_flow(grid: &GridModel, inj: &[LinExpr], l: usize) -> LinExpr {
    let mut f = LinExpr::zero();
    for (b, e) in inj.iter().enumerate() {
        let sf = grid.sf[(l, b)];
        if sf != 0.0 {
            f.add_scaled(e, sf);
        }
    }
    f
}

/// Residuals of power balance, static bounds, RTED ramps (anchored at
/// `anchor` for the first interval), line limits, and the PF simplex.
pub fn deterministic_constraints(d: &DispatchDecision, grid: &GridModel, fc: &ForecastSet, anchor: &Anchor, t_s: f64) -> ResidualReport {
    let case = &grid.case;
    let src = FixedDecision(d);
    let mut out = Vec::new();
    let mut push = |name: String, value: f64| out.push(Residual { name, value });
    for n in 0..d.horizon() {
        let t = n + 1;
        let inj = injections(&src, grid, fc, n);
        let imbalance: f64 = inj.iter().map(|e| e.constant).sum();
        push(format!("balance_{t}"), imbalance.abs());
        for i in 0..case.frr_count() {
            let (lo, hi, rr) = Frr::from_index(case, i).limits(case);
            let p = src.power(case, i, n).constant;
            let prev = if n == 0 { anchor.power[i] } else { src.power(case, i, n - 1).constant };
            push(format!("pmax_{}_{t}", i + 1), p - hi);
            push(format!("pmin_{}_{t}", i + 1), lo - p);
            push(format!("ramp_{}_{t}", i + 1), (p - prev).abs() - rr * t_s);
            push(format!("pf_range_{}_{t}", i + 1), (d.pf[n][i] - 1.0).max(-d.pf[n][i]));
        }
        for (e, s) in case.esses.iter().enumerate() {
            push(format!("pd_range_{}_{t}", e + 1), (d.p_dis[n][e] - s.p_cap).max(-d.p_dis[n][e]));
            push(format!("pc_range_{}_{t}", e + 1), (d.p_chg[n][e] - s.p_cap).max(-d.p_chg[n][e]));
        }
        for (l, spec) in case.network.lines.iter().enumerate() {
            let f = line_flow(grid, &inj, l).constant;
            push(format!("line_{}_{t}", l + 1), f.abs() - spec.capacity);
        }
        push(format!("pf_sum_{t}"), (d.pf[n].iter().sum::<f64>() - 1.0).abs());
    }
    ResidualReport { residuals: out }
}

/// Add balance, ramp, line and PF-simplex rows. Static bounds live on the
/// variables. With `ramps = false` the ramp rows are omitted.
pub fn add_deterministic_rows(
    b: &mut LpBuilder,
    vars: &DecisionVars,
    grid: &GridModel,
    fc: &ForecastSet,
    anchor: &Anchor,
    t_s: f64,
    ramps: bool,
) -> Result<(), LpError> {
    let case = &grid.case;
    for n in 0..vars.horizon() {
        let t = n + 1;
        let inj = injections(vars, grid, fc, n);
        let mut bal = LinExpr::zero();
        for e in &inj {
            bal += e;
        }
        b.add_row(format!("balance_{t}"), &bal, RowSense::Eq, 0.0)?;
        if ramps {
            for i in 0..case.frr_count() {
                let (_, _, rr) = Frr::from_index(case, i).limits(case);
                let prev = if n == 0 { LinExpr::constant(anchor.power[i]) } else { vars.power(case, i, n - 1) };
                let delta = vars.power(case, i, n) - prev;
                b.add_row(format!("ramp_up_{}_{t}", i + 1), &delta, RowSense::Le, rr * t_s)?;
                b.add_row(format!("ramp_dn_{}_{t}", i + 1), &delta, RowSense::Ge, -rr * t_s)?;
            }
        }
        for (l, spec) in case.network.lines.iter().enumerate() {
            let f = line_flow(grid, &inj, l);
            if f.is_constant() {
                continue;
            }
            b.add_row(format!("line_up_{}_{t}", l + 1), &f, RowSense::Le, spec.capacity)?;
            b.add_row(format!("line_dn_{}_{t}", l + 1), &f, RowSense::Ge, -spec.capacity)?;
        }
        let mut pf = LinExpr::zero();
        for i in 0..case.frr_count() {
            pf.add_term(vars.pf[n][i], 1.0);
        }
        b.add_row(format!("pf_sum_{t}"), &pf, RowSense::Eq, 1.0)?;
    }
    Ok(())
}
