use super::DispatchDecision;
use crate::grid::GridCase;
use crate::lp::{LpBuilder, LpError, Var};

/// How participation factors enter the model.
#[derive(Debug, Clone, PartialEq)]
pub enum PfMode {
    /// Decision variables in [0, 1].
    Free,
    /// Pinned to the given `[interval][frr]` values.
    Fixed(Vec<Vec<f64>>),
}

/// LP handles of the dispatch decisions, indexed `[interval][resource]`.
#[derive(Debug, Clone)]
pub struct DecisionVars {
    pub pg: Vec<Vec<Var>>,
    pub pd: Vec<Vec<Var>>,
    pub pc: Vec<Vec<Var>>,
    pub pf: Vec<Vec<Var>>,
}

impl DecisionVars {
    /// Register `pg_i_n`, `pd_i_n`, `pc_i_n` and `pf_i_n` (1-based) with their static bounds.
    pub fn register(b: &mut LpBuilder, case: &GridCase, horizon: usize, pf_mode: &PfMode) -> Result<Self, LpError> {
        let mut v = DecisionVars { pg: vec![], pd: vec![], pc: vec![], pf: vec![] };
        let ng = case.generators.len();
        for n in 0..horizon {
            let t = n + 1;
            let mut pg = Vec::with_capacity(ng);
            for (i, g) in case.generators.iter().enumerate() {
                pg.push(b.add_variable(format!("pg_{}_{t}", i + 1), g.p_min, g.p_max, 0.0)?);
            }
            let mut pd = Vec::new();
            let mut pc = Vec::new();
            for (e, s) in case.esses.iter().enumerate() {
                pd.push(b.add_variable(format!("pd_{}_{t}", e + 1), 0.0, s.p_cap, 0.0)?);
                pc.push(b.add_variable(format!("pc_{}_{t}", e + 1), 0.0, s.p_cap, 0.0)?);
            }
            let mut pf = Vec::new();
            for i in 0..case.frr_count() {
                let (lo, hi) = match pf_mode {
                    PfMode::Free => (0.0, 1.0),
                    PfMode::Fixed(vals) => (vals[n][i], vals[n][i]),
                };
                pf.push(b.add_variable(format!("pf_{}_{t}", i + 1), lo, hi, 0.0)?);
            }
            v.pg.push(pg);
            v.pd.push(pd);
            v.pc.push(pc);
            v.pf.push(pf);
        }
        Ok(v)
    }

    pub fn horizon(&self) -> usize {
        self.pg.len()
    }

    pub fn extract(&self, values: &[f64]) -> DispatchDecision {
        let grab = |m: &Vec<Vec<Var>>| m.iter().map(|row| row.iter().map(|v| values[v.index()]).collect()).collect();
        DispatchDecision { p_gen: grab(&self.pg), p_dis: grab(&self.pd), p_chg: grab(&self.pc), pf: grab(&self.pf) }
    }
}
