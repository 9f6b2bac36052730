use serde::{Deserialize, Serialize};

use crate::dispatch::{ChanceTermSpec, DecisionVars, Frr, SECONDS_PER_HOUR};
use crate::grid::GridCase;
use crate::lp::{LinExpr, LpBuilder, LpError, Var};
use crate::signal_stats::XI_DIM;

/// One affine piece `u·ξ + v` with `u` and `v` affine in the decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub u: [LinExpr; XI_DIM],
    pub v: LinExpr,
}

impl Segment {
    pub fn value(&self, xi: &[f64; XI_DIM], x: &[f64]) -> f64 {
        self.u.iter().zip(xi).map(|(u, c)| u.eval(x) * c).sum::<f64>() + self.v.eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermKind {
    Generation { generator: usize },
    Mileage,
    Chance { j: usize, resource: usize },
}

/// Worst-case expectation of `max_k (u_k·ξ + v_k)` over one interval's ambiguity set.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTerm {
    pub kind: TermKind,
    pub interval: usize,
    pub segments: Vec<Segment>,
    pub weight: f64,
    /// Value-at-risk variable of a chance term.
    pub var_at_risk: Option<Var>,
}

impl PiecewiseTerm {
    /// `max_k` of the segments at `xi` for decision values `x`.
    pub fn value(&self, xi: &[f64; XI_DIM], x: &[f64]) -> f64 {
        self.segments.iter().map(|s| s.value(xi, x)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_chance(&self) -> bool {
        matches!(self.kind, TermKind::Chance { .. })
    }
}

fn zero_u() -> [LinExpr; XI_DIM] {
    Default::default()
}

/// CVaR pieces of a chance term. Registers the free value-at-risk variable
/// `delta_j_i_n` (1-based) in `b`.
pub fn cvar_pieces(b: &mut LpBuilder, term: &ChanceTermSpec, weight: f64) -> Result<PiecewiseTerm, LpError> {
    let beta = term.beta;
    assert!(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
    let delta = b.free_variable(format!("delta_{}_{}_{}", term.j, term.resource + 1, term.interval + 1))?;
    let k = 1.0 / (1.0 - beta);
    let mut u1 = zero_u();
    for (c, m) in term.m.iter().enumerate() {
        u1[c] = m.scaled(k);
    }
    let v1 = (-term.headroom.clone() - LinExpr::term(delta, beta)).scaled(k);
    Ok(PiecewiseTerm {
        kind: TermKind::Chance { j: term.j, resource: term.resource },
        interval: term.interval,
        segments: vec![Segment { u: u1, v: v1 }, Segment { u: zero_u(), v: LinExpr::var(delta) }],
        weight,
        var_at_risk: Some(delta),
    })
}

/// One term per generator: segment k is `φ_k·(PG + PF·(E⁺ − E⁻)/T) + ϕ_k` over `T` hours.
/// ξ energies are in MW·s, so their coefficients carry 1/3600.
pub fn generation_cost_terms(vars: &DecisionVars, case: &GridCase, n: usize, t_s: f64) -> Vec<PiecewiseTerm> {
    let t_h = t_s / SECONDS_PER_HOUR;
    case.generators
        .iter()
        .enumerate()
        .map(|(g, spec)| {
            let pf = LinExpr::var(vars.pf[n][g]);
            let segments = spec
                .cost_segments
                .iter()
                .map(|seg| {
                    let mut u = zero_u();
                    u[0] = pf.scaled(seg.slope / SECONDS_PER_HOUR);
                    u[1] = pf.scaled(-seg.slope / SECONDS_PER_HOUR);
                    let v = (LinExpr::term(vars.pg[n][g], seg.slope) + LinExpr::constant(seg.intercept)).scaled(t_h);
                    Segment { u, v }
                })
                .collect();
            PiecewiseTerm { kind: TermKind::Generation { generator: g }, interval: n, segments, weight: 1.0, var_at_risk: None }
        })
        .collect()
}

/// Mileage payment `Σ_i φ^R_i·PF_i·M`.
pub fn mileage_term(vars: &DecisionVars, case: &GridCase, n: usize) -> PiecewiseTerm {
    let mut u = zero_u();
    for i in 0..case.frr_count() {
        u[2].add_term(vars.pf[n][i], Frr::from_index(case, i).mileage_cost(case));
    }
    PiecewiseTerm {
        kind: TermKind::Mileage,
        interval: n,
        segments: vec![Segment { u, v: LinExpr::zero() }],
        weight: 1.0,
        var_at_risk: None,
    }
}
