use crate::error::{Error, Result};
use crate::lp::{LinExpr, LpBackend, LpBuilder, RowSense};

/// Type-1 Wasserstein distance between two discrete distributions under the
/// 1-norm ground metric, by the transport LP. Weights must be non-negative
/// and sum to one.
pub fn wasserstein_distance_discrete<const D: usize>(
    a: &[[f64; D]],
    wa: &[f64],
    b: &[[f64; D]],
    wb: &[f64],
    backend: &dyn LpBackend,
) -> Result<f64> {
    if a.len() != wa.len() || b.len() != wb.len() || a.is_empty() || b.is_empty() {
        return Err(Error::input("atoms and weights must be non-empty and of equal length"));
    }
    for w in [wa, wb] {
        if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::input("weights must be non-negative and sum to one"));
        }
    }
    let mut lp = LpBuilder::new();
    let mut rows_a = vec![LinExpr::zero(); a.len()];
    let mut rows_b = vec![LinExpr::zero(); b.len()];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let cost: f64 = x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum();
            let v = lp.add_variable(format!("pi_{}_{}", i + 1, j + 1), 0.0, f64::INFINITY, cost)?;
            rows_a[i].add_term(v, 1.0);
            rows_b[j].add_term(v, 1.0);
        }
    }
    for (i, r) in rows_a.iter().enumerate() {
        lp.add_row(format!("src_{}", i + 1), r, RowSense::Eq, wa[i])?;
    }
    for (j, r) in rows_b.iter().enumerate() {
        lp.add_row(format!("dst_{}", j + 1), r, RowSense::Eq, wb[j])?;
    }
    let sol = backend.solve(&lp.finish())?;
    Ok(sol.objective.max(0.0))
}

/// Distance between two equally weighted samples.
pub fn wasserstein_uniform<const D: usize>(a: &[[f64; D]], b: &[[f64; D]], backend: &dyn LpBackend) -> Result<f64> {
    let wa = vec![1.0 / a.len() as f64; a.len()];
    let wb = vec![1.0 / b.len() as f64; b.len()];
    wasserstein_distance_discrete(a, &wa, b, &wb, backend)
}
