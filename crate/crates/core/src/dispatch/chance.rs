use super::{DecisionVars, DispatchDecision, Frr};
use crate::grid::GridCase;
use crate::lp::LinExpr;
use crate::signal_stats::XI_DIM;

/// Chance-constraint families per resource: j = 1..6 for every FRR, 7 and 8 for ESSs.
pub const CHANCE_FAMILIES: usize = 8;

/// Source of affine expressions for the decisions, either LP variables or fixed numbers.
pub trait DecisionExprs {
    fn pg(&self, g: usize, n: usize) -> LinExpr;
    fn pd(&self, e: usize, n: usize) -> LinExpr;
    fn pc(&self, e: usize, n: usize) -> LinExpr;
    fn pf(&self, i: usize, n: usize) -> LinExpr;

    /// Net output of FRR `i`.
    fn power(&self, case: &GridCase, i: usize, n: usize) -> LinExpr {
        match Frr::from_index(case, i) {
            Frr::Gen(g) => self.pg(g, n),
            Frr::Ess(e) => self.pd(e, n) - self.pc(e, n),
        }
    }
}

impl DecisionExprs for DecisionVars {
    fn pg(&self, g: usize, n: usize) -> LinExpr {
        LinExpr::var(self.pg[n][g])
    }
    fn pd(&self, e: usize, n: usize) -> LinExpr {
        LinExpr::var(self.pd[n][e])
    }
    fn pc(&self, e: usize, n: usize) -> LinExpr {
        LinExpr::var(self.pc[n][e])
    }
    fn pf(&self, i: usize, n: usize) -> LinExpr {
        LinExpr::var(self.pf[n][i])
    }
}

/// A decision with known values; every expression is constant.
pub struct FixedDecision<'a>(pub &'a DispatchDecision);

impl DecisionExprs for FixedDecision<'_> {
    fn pg(&self, g: usize, n: usize) -> LinExpr {
        LinExpr::constant(self.0.p_gen[n][g])
    }
    fn pd(&self, e: usize, n: usize) -> LinExpr {
        LinExpr::constant(self.0.p_dis[n][e])
    }
    fn pc(&self, e: usize, n: usize) -> LinExpr {
        LinExpr::constant(self.0.p_chg[n][e])
    }
    fn pf(&self, i: usize, n: usize) -> LinExpr {
        LinExpr::constant(self.0.pf[n][i])
    }
}

/// One chance constraint `P(m·ξ <= headroom) >= beta`, i.e. loss = m·ξ − headroom.
#[derive(Debug, Clone, PartialEq)]
pub struct ChanceTermSpec {
    /// Family 1..=8.
    pub j: usize,
    /// FRR index (generators then ESSs).
    pub resource: usize,
    /// 0-based interval.
    pub interval: usize,
    pub beta: f64,
    pub m: [LinExpr; XI_DIM],
    pub headroom: LinExpr,
}

impl ChanceTermSpec {
    /// Loss at `xi` as an affine expression in the decisions.
    pub fn loss_expr(&self, xi: &[f64; XI_DIM]) -> LinExpr {
        let mut e = LinExpr::zero();
        for (c, m) in self.m.iter().enumerate() {
            if xi[c] != 0.0 {
                e.add_scaled(m, xi[c]);
            }
        }
        e.add_scaled(&self.headroom, -1.0);
        e
    }

    /// Loss at `xi` for constant expressions.
    pub fn loss(&self, xi: &[f64; XI_DIM]) -> f64 {
        self.loss_expr(xi).eval(&[])
    }
}

fn single(c: usize, pf: LinExpr) -> [LinExpr; XI_DIM] {
    let mut m: [LinExpr; XI_DIM] = Default::default();
    m[c] = pf;
    m
}

/// Chance terms of interval `n`. `prev_power[i]` is FRR `i`'s output at
/// `n − 1` and `soc_prev[e]` the ESS state of charge entering `n`.
pub fn build_chance_terms(
    src: &impl DecisionExprs,
    case: &GridCase,
    n: usize,
    prev_power: &[LinExpr],
    soc_prev: &[LinExpr],
    t_s: f64,
    beta: f64,
) -> Vec<ChanceTermSpec> {
    let mut out = Vec::new();
    for i in 0..case.frr_count() {
        let (p_min, p_max, rr) = Frr::from_index(case, i).limits(case);
        let pf = src.pf(i, n);
        let p = src.power(case, i, n);
        let ramp_use = (p.clone() - prev_power[i].clone()).scaled(1.0 / t_s);
        let mut push = |j: usize, m: [LinExpr; XI_DIM], headroom: LinExpr| {
            out.push(ChanceTermSpec { j, resource: i, interval: n, beta, m, headroom });
        };
        push(1, single(3, pf.clone()), LinExpr::constant(p_max) - p.clone());
        push(2, single(4, pf.clone()), p.clone() - LinExpr::constant(p_min));
        push(3, single(5, pf.clone()), LinExpr::constant(rr));
        push(4, single(6, pf.clone()), LinExpr::constant(rr));
        push(5, single(5, pf.clone()), LinExpr::constant(rr) - ramp_use.clone());
        push(6, single(6, pf.clone()), LinExpr::constant(rr) - ramp_use);
        if let Frr::Ess(e) = Frr::from_index(case, i) {
            let s = &case.esses[e];
            let ce = s.energy_cap_mws();
            let (pd, pc) = (src.pd(e, n), src.pc(e, n));
            let mut m7: [LinExpr; XI_DIM] = Default::default();
            m7[0] = pf.scaled(-s.eta_c / ce);
            m7[1] = pf.scaled(s.eta_c / ce);
            let h7 = LinExpr::constant(s.soc_max) - soc_prev[e].clone() + p.scaled(t_s * s.eta_c / ce);
            push(7, m7, h7);
            let mut m8: [LinExpr; XI_DIM] = Default::default();
            m8[0] = pf.scaled(1.0 / (s.eta_d * ce));
            m8[1] = pf.scaled(-s.eta_c / ce);
            let h8 = soc_prev[e].clone() - pd.scaled(t_s / (s.eta_d * ce)) + pc.scaled(t_s * s.eta_c / ce) - LinExpr::constant(s.soc_min);
            push(8, m8, h8);
        }
    }
    out
}

/// Realized losses `(j, resource, loss)` of interval `n` of a fixed decision.
pub fn chance_losses(
    decision: &DispatchDecision,
    case: &GridCase,
    n: usize,
    prev_power: &[f64],
    soc_prev: &[f64],
    xi: &[f64; XI_DIM],
    t_s: f64,
) -> Vec<(usize, usize, f64)> {
    let prev: Vec<LinExpr> = prev_power.iter().map(|&p| LinExpr::constant(p)).collect();
    let soc: Vec<LinExpr> = soc_prev.iter().map(|&s| LinExpr::constant(s)).collect();
    build_chance_terms(&FixedDecision(decision), case, n, &prev, &soc, t_s, 0.0).iter().map(|t| (t.j, t.resource, t.loss(xi))).collect()
}
