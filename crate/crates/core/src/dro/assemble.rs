use serde::{Deserialize, Serialize};

use super::terms::PiecewiseTerm;
use crate::error::{Error, Result};
use crate::lp::{LinExpr, LpBuilder, RowSense, Solution, Var};
use crate::signal_stats::XI_DIM;

/// Empirical samples of ξ for one interval, the Wasserstein radius, and an
/// optional support polytope `C ξ <= d` (empty means unbounded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguitySet {
    pub samples: Vec<[f64; XI_DIM]>,
    pub epsilon: f64,
    #[serde(default)]
    pub support_c: Vec<[f64; XI_DIM]>,
    #[serde(default)]
    pub support_d: Vec<f64>,
}

impl AmbiguitySet {
    pub fn new(samples: Vec<[f64; XI_DIM]>, epsilon: f64) -> Self {
        Self { samples, epsilon, support_c: vec![], support_d: vec![] }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::input(format!("ambiguity set of interval {} has no samples", n + 1)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::input(format!("radius must be a finite non-negative number, got {}", self.epsilon)));
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite sample in interval {}", n + 1)));
        }
        if self.support_c.len() != self.support_d.len() {
            return Err(Error::input("support C and d have different row counts"));
        }
        Ok(())
    }

    /// Sample standard deviation per component, 1 where it vanishes.
    pub fn component_scales(&self) -> [f64; XI_DIM] {
        let y = self.samples.len() as f64;
        let mut out = [1.0; XI_DIM];
        if self.samples.len() < 2 {
            return out;
        }
        for (c, o) in out.iter_mut().enumerate() {
            let mean = self.samples.iter().map(|s| s[c]).sum::<f64>() / y;
            let var = self.samples.iter().map(|s| (s[c] - mean).powi(2)).sum::<f64>() / (y - 1.0);
            if var > 0.0 {
                *o = var.sqrt();
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct P3Options {
    /// Measure distances in units of each component's sample standard deviation.
    pub standardize: bool,
    /// Also require every chance term's worst-case CVaR to be non-positive.
    pub hard_chance: bool,
}

/// Where each term's auxiliary variables landed.
#[derive(Debug, Clone)]
pub struct TermIndex {
    pub lambda: Var,
    pub s: Vec<Var>,
    pub epsilon: f64,
}

impl TermIndex {
    /// Worst-case expectation `λ·ε + mean_v s_v` at a solution.
    pub fn worst_case(&self, x: &[f64]) -> f64 {
        let mean = self.s.iter().map(|v| x[v.index()]).sum::<f64>() / self.s.len() as f64;
        x[self.lambda.index()] * self.epsilon + mean
    }
}

/// Append the reformulation of `Σ_h weight_h · sup_Q E_Q max_k (u·ξ + v)` to
/// `b`: `lam_h`, `s_h_v` and (with a support polytope) `gam_h_k_v_r`, plus
/// their rows and objective terms. Term `h` uses `sets[term.interval]`.
pub fn assemble_p3(b: &mut LpBuilder, terms: &[PiecewiseTerm], sets: &[AmbiguitySet], opts: &P3Options) -> Result<Vec<TermIndex>> {
    for (n, s) in sets.iter().enumerate() {
        s.validate(n)?;
    }
    let scales: Vec<[f64; XI_DIM]> = sets.iter().map(|s| if opts.standardize { s.component_scales() } else { [1.0; XI_DIM] }).collect();
    let mut index = Vec::with_capacity(terms.len());
    for (hi, term) in terms.iter().enumerate() {
        let h = hi + 1;
        let set = sets
            .get(term.interval)
            .ok_or_else(|| Error::input(format!("term {h} refers to interval {} without an ambiguity set", term.interval + 1)))?;
        let sc = &scales[term.interval];
        let y = set.samples.len();
        let w = term.weight;
        let lambda = b.add_variable(format!("lam_{h}"), 0.0, f64::INFINITY, w * set.epsilon)?;
        let s: Vec<Var> = (1..=y)
            .map(|v| b.add_variable(format!("s_{h}_{v}"), f64::NEG_INFINITY, f64::INFINITY, w / y as f64))
            .collect::<Result<_, _>>()?;
        // standardized coordinates: ξ' = ξ / σ and u' = u·σ leave u·ξ unchanged
        let u_scaled: Vec<[LinExpr; XI_DIM]> = term.segments.iter().map(|seg| std::array::from_fn(|c| seg.u[c].scaled(sc[c]))).collect();
        let support = !set.support_c.is_empty();
        for (k, seg) in term.segments.iter().enumerate() {
            for (v, xi) in set.samples.iter().enumerate() {
                let mut row = seg.v.clone();
                for c in 0..XI_DIM {
                    if xi[c] != 0.0 && !seg.u[c].is_zero() {
                        row.add_scaled(&seg.u[c], xi[c]);
                    }
                }
                row.add_term(s[v], -1.0);
                if support {
                    let xs: [f64; XI_DIM] = std::array::from_fn(|c| xi[c] / sc[c]);
                    let mut ct_gamma: [LinExpr; XI_DIM] = Default::default();
                    for (r, (crow, d)) in set.support_c.iter().zip(&set.support_d).enumerate() {
                        let gam = b.add_variable(format!("gam_{h}_{}_{}_{}", k + 1, v + 1, r + 1), 0.0, f64::INFINITY, 0.0)?;
                        let slack = d - crow.iter().zip(&xs).map(|(a, x)| a * x).sum::<f64>();
                        row.add_term(gam, slack);
                        for c in 0..XI_DIM {
                            if crow[c] != 0.0 {
                                ct_gamma[c].add_term(gam, crow[c]);
                            }
                        }
                    }
                    for c in 0..XI_DIM {
                        let diff = ct_gamma[c].clone() - u_scaled[k][c].clone();
                        if diff.is_zero() {
                            continue;
                        }
                        let name = format!("norm_{h}_{}_{}_{}", k + 1, v + 1, c + 1);
                        b.add_row(format!("{name}_p"), &(diff.clone() - LinExpr::var(lambda)), RowSense::Le, 0.0)?;
                        b.add_row(format!("{name}_m"), &(-diff - LinExpr::var(lambda)), RowSense::Le, 0.0)?;
                    }
                }
                b.add_row(format!("seg_{h}_{}_{}", k + 1, v + 1), &row, RowSense::Le, 0.0)?;
            }
            if !support {
                for c in 0..XI_DIM {
                    let u = &u_scaled[k][c];
                    if u.is_zero() {
                        continue;
                    }
                    let name = format!("norm_{h}_{}_{}", k + 1, c + 1);
                    b.add_row(format!("{name}_p"), &(u.clone() - LinExpr::var(lambda)), RowSense::Le, 0.0)?;
                    b.add_row(format!("{name}_m"), &(-u.clone() - LinExpr::var(lambda)), RowSense::Le, 0.0)?;
                }
            }
        }
        if opts.hard_chance && term.is_chance() {
            let mut wc = LinExpr::term(lambda, set.epsilon);
            for &sv in &s {
                wc.add_term(sv, 1.0 / y as f64);
            }
            b.add_row(format!("cvar_{h}"), &wc, RowSense::Le, 0.0)?;
        }
        index.push(TermIndex { lambda, s, epsilon: set.epsilon });
    }
    Ok(index)
}

/// Per-term worst-case expectations (unweighted) at a solution.
pub fn term_values(index: &[TermIndex], sol: &Solution) -> Vec<f64> {
    index.iter().map(|t| t.worst_case(&sol.values)).collect()
}
