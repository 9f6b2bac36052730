use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::family::{CopulaSpec, Family, PreparedCopula};
use super::kendall::kendall_tau;
use super::marginal::MIN_OBSERVATIONS;
use crate::error::{Error, Result};
use crate::par::{map_range, map_slice, Exec};

/// Degrees of freedom tried for the Student-t copula.
pub const DOF_GRID: [f64; 8] = [2.5, 3.0, 4.0, 6.0, 8.0, 12.0, 20.0, 30.0];

/// Smallest eigenvalue kept by the positive-definite projection.
pub const EIGEN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub log_likelihood: f64,
    pub param_count: usize,
    pub sample_count: usize,
    pub bic: f64,
}

impl FitReport {
    pub fn new(log_likelihood: f64, param_count: usize, sample_count: usize) -> Self {
        let bic = -2.0 * log_likelihood + param_count as f64 * (sample_count as f64).ln();
        Self { log_likelihood, param_count, sample_count, bic }
    }
}

/// Pairwise Kendall tau of the columns of `data` (row-major).
pub fn kendall_matrix(data: &[Vec<f64>], exec: Exec) -> DMatrix<f64> {
    let d = data.first().map_or(0, Vec::len);
    let cols: Vec<Vec<f64>> = (0..d).map(|c| data.iter().map(|r| r[c]).collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let taus = map_slice(exec, &pairs, |&(i, j)| kendall_tau(&cols[i], &cols[j]));
    let mut m = DMatrix::identity(d, d);
    for (&(i, j), t) in pairs.iter().zip(taus) {
        m[(i, j)] = t;
        m[(j, i)] = t;
    }
    m
}

/// Clip eigenvalues at [`EIGEN_FLOOR`] and rescale to a unit diagonal.
pub fn nearest_correlation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let mut a = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)].sqrt()).collect();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            a[(i, j)] /= d[i] * d[j];
        }
        a[(i, i)] = 1.0;
    }
    a
}

/// Correlation from Kendall's tau, `sin(π τ / 2)`, projected to positive definite.
pub fn correlation_from_tau(tau: &DMatrix<f64>) -> DMatrix<f64> {
    let raw = tau.map(|t| (PI * t / 2.0).sin());
    nearest_correlation(&raw)
}

fn check_pseudo(u: &[Vec<f64>]) -> Result<usize> {
    if u.len() < MIN_OBSERVATIONS {
        return Err(Error::Fit(format!("copula fit needs at least {MIN_OBSERVATIONS} rows, got {}", u.len())));
    }
    let d = u[0].len();
    if d < 2 {
        return Err(Error::Fit("copula fit needs at least two columns".into()));
    }
    for (i, r) in u.iter().enumerate() {
        if r.len() != d {
            return Err(Error::Fit(format!("row {} has {} columns, expected {d}", i + 1, r.len())));
        }
        if r.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Fit(format!("row {} is not strictly inside the unit cube", i + 1)));
        }
    }
    Ok(d)
}

/// Pseudo log-likelihood of `u` under `c`.
pub fn log_likelihood(c: &PreparedCopula, u: &[Vec<f64>], exec: Exec) -> f64 {
    map_slice(exec, u, |r| c.log_density_unchecked(r)).iter().sum()
}

/// Maximise a unimodal `f` on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa < fb || fa.is_nan() {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    if fa > fb {
        a
    } else {
        b
    }
}

/// Fit one family to pseudo-observations. `tau` may carry a precomputed
/// Kendall matrix for the elliptical families.
pub fn fit_copula(family: Family, u: &[Vec<f64>], tau: Option<&DMatrix<f64>>, exec: Exec) -> Result<(CopulaSpec, FitReport)> {
    let d = check_pseudo(u)?;
    let n = u.len();
    let spec = match family {
        Family::Gaussian | Family::StudentT => {
            let tau = match tau {
                Some(t) => t.clone(),
                None => kendall_matrix(u, exec),
            };
            let corr = correlation_from_tau(&tau);
            if family == Family::Gaussian {
                CopulaSpec::gaussian(&corr)
            } else {
                let lls = map_range(exec, DOF_GRID.len(), |k| {
                    CopulaSpec::student_t(&corr, DOF_GRID[k])
                        .prepare()
                        .map(|c| log_likelihood(&c, u, Exec::Sequential))
                        .unwrap_or(f64::NEG_INFINITY)
                });
                let best = (0..DOF_GRID.len()).max_by(|&a, &b| lls[a].total_cmp(&lls[b])).unwrap_or(0);
                CopulaSpec::student_t(&corr, DOF_GRID[best])
            }
        }
        fam => {
            // search over log θ (log(θ − 1) for Gumbel)
            let (lo, hi, offset) = match fam {
                Family::Gumbel => (1e-4f64.ln(), 50f64.ln(), 1.0),
                Family::Clayton => (1e-4f64.ln(), 50f64.ln(), 0.0),
                _ => (1e-4f64.ln(), 100f64.ln(), 0.0),
            };
            let ll = |s: f64| {
                CopulaSpec::archimedean(fam, d, offset + s.exp())
                    .prepare()
                    .map(|c| log_likelihood(&c, u, exec))
                    .ok()
                    .filter(|v| v.is_finite())
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let s = golden_max(ll, lo, hi, 60);
            CopulaSpec::archimedean(fam, d, offset + s.exp())
        }
    };
    let prepared = spec.prepare()?;
    let ll = log_likelihood(&prepared, u, exec);
    if !ll.is_finite() {
        return Err(Error::Fit(format!("{family} copula log-likelihood is not finite")));
    }
    Ok((spec, FitReport::new(ll, family.param_count(d), n)))
}

/// One fitted candidate in a BIC comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub spec: CopulaSpec,
    pub report: FitReport,
}

/// Fit all five families and return the candidates (failures dropped with a
/// warning) and the index of the lowest BIC.
pub fn select_by_bic(u: &[Vec<f64>], exec: Exec) -> Result<(Vec<Candidate>, usize)> {
    check_pseudo(u)?;
    let tau = kendall_matrix(u, exec);
    let fits = map_slice(exec, &Family::ALL, |&f| fit_copula(f, u, Some(&tau), exec));
    let mut out = Vec::new();
    for (f, r) in Family::ALL.iter().zip(fits) {
        match r {
            Ok((spec, report)) => out.push(Candidate { spec, report }),
            Err(e) => log::warn!("{f} copula excluded from selection: {e}"),
        }
    }
    if out.is_empty() {
        return Err(Error::Fit("no copula family could be fitted".into()));
    }
    let best = (0..out.len()).min_by(|&a, &b| out[a].report.bic.total_cmp(&out[b].report.bic)).unwrap_or(0);
    Ok((out, best))
}
