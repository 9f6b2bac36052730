//! Solver contract and the HiGHS-backed implementation.

use highs::{HighsModelStatus, RowProblem, Sense};

use super::{LpError, LpModel, RowSense};

/// What a backend promises about the solutions it returns.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BackendContract {
    pub free_variables: bool,
    pub equality_rows: bool,
    /// Primal feasibility tolerance the backend solves to.
    pub tolerance: f64,
}

/// Tolerance the acceptance runs require from any backend.
pub const ACCEPTANCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub objective: f64,
    pub values: Vec<f64>,
}

/// A linear-programming solver. Implementations must be reentrant across
/// distinct models so that independent solves can run concurrently.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn contract(&self) -> BackendContract;
    /// Solve to optimality. Infeasible and unbounded models come back as the
    /// matching [`LpError`] variants.
    fn solve(&self, model: &LpModel) -> Result<Solution, LpError>;
}

#[derive(Debug, Clone, Copy)]
pub struct HighsBackend {
    pub tolerance: f64,
    pub threads: u32,
}

impl Default for HighsBackend {
    fn default() -> Self {
        Self { tolerance: 1e-9, threads: 1 }
    }
}

impl LpBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn contract(&self) -> BackendContract {
        BackendContract { free_variables: true, equality_rows: true, tolerance: self.tolerance }
    }

    fn solve(&self, model: &LpModel) -> Result<Solution, LpError> {
        if model.num_vars() == 0 {
            return Ok(Solution { objective: model.objective_offset, values: Vec::new() });
        }
        let mut pb = RowProblem::default();
        let cols: Vec<_> = model.variables.iter().map(|v| pb.add_column(v.obj, v.lower..=v.upper)).collect();
        for row in &model.rows {
            let coeffs: Vec<_> = row.coeffs.iter().map(|&(v, c)| (cols[v.0], c)).collect();
            match row.sense {
                RowSense::Le => pb.add_row(..=row.rhs, coeffs),
                RowSense::Ge => pb.add_row(row.rhs.., coeffs),
                RowSense::Eq => pb.add_row(row.rhs..=row.rhs, coeffs),
            }
        }
        let mut m = pb.try_optimise(Sense::Minimise).map_err(|s| LpError::Backend(format!("{s:?}")))?;
        m.make_quiet();
        m.set_option("threads", self.threads as i32);
        m.set_option("primal_feasibility_tolerance", self.tolerance);
        m.set_option("dual_feasibility_tolerance", self.tolerance);
        let solved = m.try_solve().map_err(|s| LpError::Backend(format!("{s:?}")))?;
        match solved.status() {
            HighsModelStatus::Optimal => {
                let values = solved.get_solution().columns().to_vec();
                let objective = model.objective_value(&values);
                Ok(Solution { objective, values })
            }
            HighsModelStatus::Infeasible => Err(LpError::Infeasible),
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => Err(LpError::Unbounded),
            other => Err(LpError::Backend(format!("solver stopped with status {other:?}"))),
        }
    }
}

/// Re-check a returned point against the model without trusting the backend:
/// every row and bound within `tol`, and the reported objective reproduced
/// within `tol` relative.
pub fn verify(model: &LpModel, sol: &Solution, tol: f64) -> Result<(), LpError> {
    if sol.values.len() != model.num_vars() {
        return Err(LpError::Backend("solution length mismatch".into()));
    }
    let viol = model.max_violation(&sol.values);
    if viol > tol {
        return Err(LpError::Verification(format!("primal violation {viol:.3e} exceeds {tol:.1e}")));
    }
    let obj = model.objective_value(&sol.values);
    let gap = (obj - sol.objective).abs() / obj.abs().max(1.0);
    if gap > tol {
        return Err(LpError::Verification(format!("objective mismatch: reported {} vs {}", sol.objective, obj)));
    }
    Ok(())
}
