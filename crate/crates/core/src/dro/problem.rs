use serde::{Deserialize, Serialize};

use super::assemble::{assemble_p3, AmbiguitySet, P3Options, TermIndex};
use super::terms::{cvar_pieces, generation_cost_terms, mileage_term, PiecewiseTerm, TermKind};
use crate::dispatch::{
    add_deterministic_rows, build_chance_terms, Anchor, ChanceTermSpec, DecisionExprs, DecisionVars, DispatchDecision, PfMode,
    SECONDS_PER_HOUR,
};
use crate::error::{Error, Result};
use crate::grid::{ForecastSet, GridModel};
use crate::lp::{LinExpr, LpBackend, LpBuilder, LpError, LpModel, RowSense, Solution, Var};
use crate::signal_stats::XI_DIM;

/// Which dispatch model to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Formulation {
    /// Worst-case expected cost over Wasserstein balls with CVaR penalties
    /// (or hard CVaR rows) on the chance constraints.
    Dro { rho: f64, beta: f64, standardize: bool, hard: bool },
    /// Every chance constraint enforced at a single point estimate of ξ, the
    /// only sample of each interval's set. `slack` relaxes all of them equally.
    Robust { slack: f64 },
    /// Fixed participation factors, energy cost at ξ = 0, SOC limits at ξ = 0.
    Traditional { pf: Vec<Vec<f64>> },
}

impl Formulation {
    pub fn label(&self) -> &'static str {
        match self {
            Formulation::Dro { .. } => "dro",
            Formulation::Robust { .. } => "robust",
            Formulation::Traditional { .. } => "traditional",
        }
    }
}

/// Everything the dispatch LP depends on besides the formulation.
#[derive(Debug, Clone, Copy)]
pub struct RtedInputs<'a> {
    pub grid: &'a GridModel,
    pub forecasts: &'a ForecastSet,
    pub anchor: &'a Anchor,
    /// Realized SOC entering the first interval, per ESS.
    pub soc0: &'a [f64],
    /// One ambiguity set per interval.
    pub sets: &'a [AmbiguitySet],
    pub t_s: f64,
}

/// An assembled dispatch LP and the handles needed to read its solution.
#[derive(Debug, Clone)]
pub struct RtedProblem {
    pub model: LpModel,
    pub vars: DecisionVars,
    pub terms: Vec<PiecewiseTerm>,
    pub index: Vec<TermIndex>,
    pub chance: Vec<ChanceTermSpec>,
    degradation: LinExpr,
}

/// Objective split by source, in $.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveParts {
    pub degradation: f64,
    pub generation: f64,
    pub mileage: f64,
    /// Weighted worst-case CVaR of the chance constraints.
    pub chance_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    #[serde(flatten)]
    pub kind: TermKind,
    pub interval: usize,
    /// Unweighted worst-case expectation.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtedSolution {
    pub objective: f64,
    pub parts: ObjectiveParts,
    pub decision: DispatchDecision,
    pub terms: Vec<TermValue>,
    /// Uniform relaxation of the chance rows (robust formulation only).
    pub slack: f64,
}

fn mean_energies(set: &AmbiguitySet) -> (f64, f64) {
    let y = set.samples.len() as f64;
    let ep = set.samples.iter().map(|s| s[0]).sum::<f64>() / y;
    let em = set.samples.iter().map(|s| s[1]).sum::<f64>() / y;
    (ep, em)
}

/// SOC entering each interval as affine expressions, propagated with the
/// expected regulation energies of the preceding interval's set.
fn soc_trajectory(vars: &DecisionVars, inp: &RtedInputs) -> Vec<Vec<LinExpr>> {
    let case = &inp.grid.case;
    let g = case.generators.len();
    let mut out = vec![inp.soc0.iter().map(|&s| LinExpr::constant(s)).collect::<Vec<_>>()];
    for n in 0..vars.horizon().saturating_sub(1) {
        let (ep, em) = mean_energies(&inp.sets[n]);
        let next = case
            .esses
            .iter()
            .enumerate()
            .map(|(e, s)| {
                let ce = s.energy_cap_mws();
                let pf = vars.pf(g + e, n);
                let mut d = vars.pd(e, n).scaled(inp.t_s / (s.eta_d * ce)) - vars.pc(e, n).scaled(inp.t_s * s.eta_c / ce);
                d.add_scaled(&pf, ep / (s.eta_d * ce) - em * s.eta_c / ce);
                out[n][e].clone() - d
            })
            .collect();
        out.push(next);
    }
    out
}

fn check_inputs(inp: &RtedInputs, f: &Formulation) -> Result<usize> {
    let case = &inp.grid.case;
    let horizon = inp.forecasts.horizon();
    if horizon == 0 {
        return Err(Error::input("forecast horizon is empty"));
    }
    if inp.sets.len() < horizon {
        return Err(Error::input(format!("{} ambiguity sets for a horizon of {horizon}", inp.sets.len())));
    }
    if inp.anchor.power.len() != case.frr_count() {
        return Err(Error::input(format!("anchor has {} entries, case has {} FRRs", inp.anchor.power.len(), case.frr_count())));
    }
    if inp.soc0.len() != case.esses.len() {
        return Err(Error::input(format!("{} initial SOC values for {} ESSs", inp.soc0.len(), case.esses.len())));
    }
    match f {
        Formulation::Dro { rho, beta, .. } => {
            if !(*rho >= 0.0 && rho.is_finite()) {
                return Err(Error::input(format!("rho must be finite and non-negative, got {rho}")));
            }
            if !(*beta > 0.0 && *beta < 1.0) {
                return Err(Error::input(format!("beta must lie in (0,1), got {beta}")));
            }
        }
        Formulation::Robust { slack } => {
            if !(*slack >= 0.0) {
                return Err(Error::input("robust slack must be non-negative"));
            }
            if inp.sets[..horizon].iter().any(|s| s.samples.len() != 1) {
                return Err(Error::input("the robust formulation takes exactly one point per interval"));
            }
        }
        Formulation::Traditional { pf } => {
            if pf.len() < horizon || pf.iter().any(|r| r.len() != case.frr_count()) {
                return Err(Error::input("fixed participation factors do not match the horizon and FRR count"));
            }
        }
    }
    Ok(horizon)
}

/// Build the dispatch LP of `f`. Variable and row names are stable and 1-based.
pub fn build_rted(inp: &RtedInputs, f: &Formulation) -> Result<RtedProblem> {
    build_with(inp, f, true)
}

fn build_with(inp: &RtedInputs, f: &Formulation, ramps: bool) -> Result<RtedProblem> {
    let horizon = check_inputs(inp, f)?;
    let case = &inp.grid.case;
    let mut b = LpBuilder::new();
    let pf_mode = match f {
        Formulation::Traditional { pf } => PfMode::Fixed(pf[..horizon].to_vec()),
        _ => PfMode::Free,
    };
    let vars = DecisionVars::register(&mut b, case, horizon, &pf_mode)?;
    add_deterministic_rows(&mut b, &vars, inp.grid, inp.forecasts, inp.anchor, inp.t_s, ramps)?;

    let t_h = inp.t_s / SECONDS_PER_HOUR;
    let mut degradation = LinExpr::zero();
    for n in 0..horizon {
        for (e, s) in case.esses.iter().enumerate() {
            degradation.add_term(vars.pd[n][e], s.degradation_cost * t_h / s.eta_d);
            degradation.add_term(vars.pc[n][e], s.degradation_cost * t_h * s.eta_c);
        }
    }
    b.add_objective(&degradation)?;

    let socs = soc_trajectory(&vars, inp);
    let beta = match f {
        Formulation::Dro { beta, .. } => *beta,
        _ => 0.5,
    };
    let mut chance = Vec::new();
    for n in 0..horizon {
        let prev: Vec<LinExpr> = (0..case.frr_count())
            .map(|i| if n == 0 { LinExpr::constant(inp.anchor.power[i]) } else { vars.power(case, i, n - 1) })
            .collect();
        chance.extend(build_chance_terms(&vars, case, n, &prev, &socs[n], inp.t_s, beta));
    }

    let mut terms = Vec::new();
    for n in 0..horizon {
        terms.extend(generation_cost_terms(&vars, case, n, inp.t_s));
        if !matches!(f, Formulation::Traditional { .. }) {
            terms.push(mileage_term(&vars, case, n));
        }
    }
    let mut opts = P3Options::default();
    match f {
        Formulation::Dro { rho, standardize, hard, .. } => {
            opts = P3Options { standardize: *standardize, hard_chance: *hard };
            for c in &chance {
                terms.push(cvar_pieces(&mut b, c, *rho)?);
            }
        }
        Formulation::Robust { slack } => {
            for c in &chance {
                let xi = &inp.sets[c.interval].samples[0];
                add_hard_row(&mut b, c, xi, *slack)?;
            }
        }
        Formulation::Traditional { .. } => {
            for c in chance.iter().filter(|c| c.j >= 7) {
                add_hard_row(&mut b, c, &[0.0; XI_DIM], 0.0)?;
            }
        }
    }
    let index = match f {
        Formulation::Traditional { .. } => {
            let zero: Vec<AmbiguitySet> = (0..horizon).map(|_| AmbiguitySet::new(vec![[0.0; XI_DIM]], 0.0)).collect();
            assemble_p3(&mut b, &terms, &zero, &opts)?
        }
        _ => assemble_p3(&mut b, &terms, &inp.sets[..horizon], &opts)?,
    };
    Ok(RtedProblem { model: b.finish(), vars, terms, index, chance, degradation })
}

fn add_hard_row(b: &mut LpBuilder, c: &ChanceTermSpec, xi: &[f64; XI_DIM], slack: f64) -> Result<(), LpError> {
    let loss = c.loss_expr(xi);
    let name = format!("chance_{}_{}_{}", c.j, c.resource + 1, c.interval + 1);
    if loss.is_constant() {
        // nothing to decide; infeasible constants surface through the slack search
        if loss.constant > slack + 1e-9 {
            return Err(LpError::Infeasible);
        }
        return Ok(());
    }
    b.add_row(name, &loss, RowSense::Le, slack).map(|_| ())
}

impl RtedProblem {
    /// Read a solver result back into decisions and per-term values.
    pub fn interpret(&self, sol: &Solution, slack: f64) -> RtedSolution {
        let x = &sol.values;
        let mut parts = ObjectiveParts { degradation: self.degradation.eval(x), ..Default::default() };
        let mut terms = Vec::with_capacity(self.terms.len());
        for (t, idx) in self.terms.iter().zip(&self.index) {
            let value = idx.worst_case(x);
            match t.kind {
                TermKind::Generation { .. } => parts.generation += value,
                TermKind::Mileage => parts.mileage += value,
                TermKind::Chance { .. } => parts.chance_penalty += t.weight * value,
            }
            terms.push(TermValue { kind: t.kind, interval: t.interval, value });
        }
        RtedSolution { objective: sol.objective, parts, decision: self.vars.extract(x), terms, slack }
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.model.var_by_name(name)
    }
}

/// Build and solve. The robust formulation, when infeasible, is retried with
/// the smallest uniform slack that restores feasibility.
pub fn solve_rted(inp: &RtedInputs, f: &Formulation, backend: &dyn LpBackend) -> Result<RtedSolution> {
    solve_rted_checked(inp, f, backend).map(|(s, _)| s)
}

/// As [`solve_rted`], also returning the largest row or bound violation of
/// the returned point in the LP that produced it.
pub fn solve_rted_checked(inp: &RtedInputs, f: &Formulation, backend: &dyn LpBackend) -> Result<(RtedSolution, f64)> {
    let first = build_rted(inp, f).and_then(|p| solve_built(&p, backend, 0.0));
    match (first, f) {
        (Err(Error::Lp(LpError::Infeasible)), Formulation::Robust { .. }) => {
            let slack = minimal_robust_slack(inp, backend)?;
            let relaxed = Formulation::Robust { slack: slack * (1.0 + 1e-9) + 1e-9 };
            solve_built(&build_rted(inp, &relaxed)?, backend, slack)
        }
        (r, _) => r,
    }
}

fn solve_built(p: &RtedProblem, backend: &dyn LpBackend, slack: f64) -> Result<(RtedSolution, f64)> {
    let sol = backend.solve(&p.model)?;
    Ok((p.interpret(&sol, slack), p.model.max_violation(&sol.values)))
}

/// Single-interval dispatch with fixed participation factors and no ramp
/// rows, used to place resources before the first look-ahead.
pub fn unramped_dispatch(
    grid: &GridModel,
    forecasts: &ForecastSet,
    soc0: &[f64],
    pf: &[f64],
    t_s: f64,
    backend: &dyn LpBackend,
) -> Result<RtedSolution> {
    let case = &grid.case;
    let anchor = crate::dispatch::Anchor { power: vec![0.0; case.frr_count()] };
    let horizon = forecasts.horizon();
    let sets: Vec<AmbiguitySet> = (0..horizon).map(|_| AmbiguitySet::new(vec![[0.0; XI_DIM]], 0.0)).collect();
    let inp = RtedInputs { grid, forecasts, anchor: &anchor, soc0, sets: &sets, t_s };
    let f = Formulation::Traditional { pf: vec![pf.to_vec(); horizon] };
    let p = build_with(&inp, &f, false)?;
    solve_built(&p, backend, 0.0).map(|(s, _)| s)
}

/// Smallest `σ >= 0` such that every robust chance row holds with `loss <= σ`.
pub fn minimal_robust_slack(inp: &RtedInputs, backend: &dyn LpBackend) -> Result<f64> {
    let horizon = check_inputs(inp, &Formulation::Robust { slack: 0.0 })?;
    let case = &inp.grid.case;
    let mut b = LpBuilder::new();
    let vars = DecisionVars::register(&mut b, case, horizon, &PfMode::Free)?;
    add_deterministic_rows(&mut b, &vars, inp.grid, inp.forecasts, inp.anchor, inp.t_s, true)?;
    let sigma = b.add_variable("sigma", 0.0, f64::INFINITY, 1.0)?;
    let socs = soc_trajectory(&vars, inp);
    for n in 0..horizon {
        let prev: Vec<LinExpr> = (0..case.frr_count())
            .map(|i| if n == 0 { LinExpr::constant(inp.anchor.power[i]) } else { vars.power(case, i, n - 1) })
            .collect();
        for c in build_chance_terms(&vars, case, n, &prev, &socs[n], inp.t_s, 0.5) {
            let loss = c.loss_expr(&inp.sets[n].samples[0]) - LinExpr::var(sigma);
            b.add_row(format!("chance_{}_{}_{}", c.j, c.resource + 1, n + 1), &loss, RowSense::Le, 0.0)?;
        }
    }
    let model = b.finish();
    let sol = backend.solve(&model)?;
    Ok(sol.values[sigma.index()])
}
