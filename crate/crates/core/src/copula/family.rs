use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Gaussian,
    StudentT,
    Gumbel,
    Clayton,
    Frank,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Gaussian, Family::StudentT, Family::Gumbel, Family::Clayton, Family::Frank];

    pub fn is_elliptical(self) -> bool {
        matches!(self, Family::Gaussian | Family::StudentT)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::StudentT => "student_t",
            Family::Gumbel => "gumbel",
            Family::Clayton => "clayton",
            Family::Frank => "frank",
        }
    }

    /// Free parameters of a `dim`-dimensional member.
    pub fn param_count(self, dim: usize) -> usize {
        match self {
            Family::Gaussian => dim * (dim - 1) / 2,
            Family::StudentT => dim * (dim - 1) / 2 + 1,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s) || format!("{f:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::input(format!("unknown copula family {s:?}")))
    }
}

/// A parametrised copula. Elliptical families carry a row-major correlation
/// matrix; Archimedean families a single `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: Family,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corr: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dof: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl CopulaSpec {
    pub fn gaussian(corr: &DMatrix<f64>) -> Self {
        Self { family: Family::Gaussian, dim: corr.nrows(), corr: row_major(corr), dof: None, theta: None }
    }

    pub fn student_t(corr: &DMatrix<f64>, dof: f64) -> Self {
        Self { family: Family::StudentT, dim: corr.nrows(), corr: row_major(corr), dof: Some(dof), theta: None }
    }

    pub fn archimedean(family: Family, dim: usize, theta: f64) -> Self {
        assert!(!family.is_elliptical());
        Self { family, dim, corr: vec![], dof: None, theta: Some(theta) }
    }

    pub fn corr_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.corr)
    }

    /// Check parameters and precompute what density and sampling need.
    pub fn prepare(&self) -> Result<PreparedCopula> {
        let bad = |m: String| Err(Error::Fit(format!("{} copula: {m}", self.family)));
        if self.dim < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.dim));
        }
        let kind = match self.family {
            Family::Gaussian | Family::StudentT => {
                if self.corr.len() != self.dim * self.dim {
                    return bad(format!("correlation has {} entries, expected {}", self.corr.len(), self.dim * self.dim));
                }
                let r = self.corr_matrix();
                let chol = Cholesky::new(r.clone())
                    .ok_or_else(|| Error::Fit(format!("{} copula: correlation not positive definite", self.family)))?;
                let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                let inv = chol.inverse();
                let dof = match self.family {
                    Family::StudentT => match self.dof {
                        Some(v) if v > 0.0 && v.is_finite() => Some(v),
                        other => return bad(format!("degrees of freedom must be positive, got {other:?}")),
                    },
                    _ => None,
                };
                Kind::Elliptical { corr: r, chol, inv, log_det, dof }
            }
            fam => {
                let theta = self.theta.unwrap_or(f64::NAN);
                let ok = match fam {
                    Family::Gumbel => theta >= 1.0,
                    _ => theta > 0.0,
                };
                if !(ok && theta.is_finite()) {
                    return bad(format!("theta {theta} outside the admissible range"));
                }
                let coeffs = match fam {
                    Family::Gumbel => gumbel_coefficients(self.dim, 1.0 / theta).iter().map(|c| c.ln()).collect(),
                    Family::Frank => eulerian_row(self.dim - 1).iter().map(|c| c.ln()).collect(),
                    _ => vec![],
                };
                Kind::Archimedean { theta, log_coeffs: coeffs }
            }
        };
        Ok(PreparedCopula { family: self.family, dim: self.dim, kind })
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[derive(Debug, Clone)]
enum Kind {
    Elliptical { corr: DMatrix<f64>, chol: Cholesky<f64, Dyn>, inv: DMatrix<f64>, log_det: f64, dof: Option<f64> },
    Archimedean { theta: f64, log_coeffs: Vec<f64> },
}

/// A validated copula with cached factorisations.
#[derive(Debug, Clone)]
pub struct PreparedCopula {
    pub family: Family,
    pub dim: usize,
    kind: Kind,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn t_dist(dof: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, dof).expect("positive dof")
}

/// Coefficients `A_a`, a = 1..=d, with `|ψ⁽ᵈ⁾(t)| = e^{-t^α} t^{-d} Σ_a A_a t^{aα}`
/// for the Gumbel generator `ψ(t) = exp(-t^α)`. All terms are non-negative.
pub(crate) fn gumbel_coefficients(d: usize, alpha: f64) -> Vec<f64> {
    let mut a = vec![0.0; d + 1];
    a[0] = 1.0;
    for b in 0..d {
        let mut next = vec![0.0; d + 1];
        for k in 0..=b + 1 {
            let keep = if k <= b { (b as f64 - k as f64 * alpha) * a[k] } else { 0.0 };
            let shift = if k >= 1 { alpha * a[k - 1] } else { 0.0 };
            next[k] = keep + shift;
        }
        a = next;
    }
    a.remove(0);
    a
}

/// Eulerian numbers `A(n, k)`, k = 0..n-1 (just `[1]` for n = 0).
pub(crate) fn eulerian_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for m in 2..=n {
        let mut next = vec![0.0; m];
        for k in 0..m {
            let a = if k < row.len() { (k + 1) as f64 * row[k] } else { 0.0 };
            let b = if k >= 1 && k - 1 < row.len() { (m - k) as f64 * row[k - 1] } else { 0.0 };
            next[k] = a + b;
        }
        row = next;
    }
    row
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(1 - e^{-x})` for `x > 0`.
fn ln_one_minus_exp_neg(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

impl PreparedCopula {
    pub fn corr(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Elliptical { corr, .. } => Some(corr),
            _ => None,
        }
    }

    pub fn dof(&self) -> Option<f64> {
        match &self.kind {
            Kind::Elliptical { dof, .. } => *dof,
            _ => None,
        }
    }

    /// Map uniforms to the latent scale of an elliptical family.
    pub fn to_latent(&self, u: &[f64]) -> Vec<f64> {
        match self.dof() {
            Some(v) => {
                let t = t_dist(v);
                u.iter().map(|&x| t.inverse_cdf(x)).collect()
            }
            None => {
                let n = std_normal();
                u.iter().map(|&x| n.inverse_cdf(x)).collect()
            }
        }
    }

    pub fn from_latent(&self, z: &[f64]) -> Vec<f64> {
        match self.dof() {
            Some(v) => {
                let t = t_dist(v);
                z.iter().map(|&x| t.cdf(x)).collect()
            }
            None => {
                let n = std_normal();
                z.iter().map(|&x| n.cdf(x)).collect()
            }
        }
    }

    /// Log copula density at `u` in the open unit cube.
    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::input(format!("point has {} coordinates, copula has {}", u.len(), self.dim)));
        }
        if u.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::input("copula density is defined on the open unit cube only"));
        }
        Ok(self.log_density_unchecked(u))
    }

    pub(crate) fn log_density_unchecked(&self, u: &[f64]) -> f64 {
        let d = self.dim as f64;
        match &self.kind {
            Kind::Elliptical { inv, log_det, dof, .. } => {
                let z = DVector::from_vec(self.to_latent(u));
                let q = (inv * &z).dot(&z);
                match dof {
                    None => -0.5 * log_det - 0.5 * (q - z.dot(&z)),
                    Some(v) => {
                        let joint = ln_gamma((v + d) / 2.0)
                            - ln_gamma(v / 2.0)
                            - 0.5 * d * (v * PI).ln()
                            - 0.5 * log_det
                            - 0.5 * (v + d) * (q / v).ln_1p();
                        let marg: f64 = z
                            .iter()
                            .map(|x| {
                                ln_gamma((v + 1.0) / 2.0) - ln_gamma(v / 2.0) - 0.5 * (v * PI).ln() - 0.5 * (v + 1.0) * (x * x / v).ln_1p()
                            })
                            .sum();
                        joint - marg
                    }
                }
            }
            Kind::Archimedean { theta, log_coeffs } => {
                let th = *theta;
                match self.family {
                    Family::Clayton => {
                        let s: f64 = u.iter().map(|x| x.powf(-th)).sum::<f64>() - d + 1.0;
                        let lead: f64 = (0..self.dim).map(|k| (k as f64 * th).ln_1p()).sum();
                        lead - (1.0 + th) * u.iter().map(|x| x.ln()).sum::<f64>() - (d + 1.0 / th) * s.ln()
                    }
                    Family::Gumbel => {
                        let alpha = 1.0 / th;
                        let l: Vec<f64> = u.iter().map(|x| -x.ln()).collect();
                        let t: f64 = l.iter().map(|x| x.powf(th)).sum();
                        let lt = t.ln();
                        let poly = log_sum_exp(log_coeffs.iter().enumerate().map(|(k, c)| c + (k + 1) as f64 * alpha * lt));
                        let deriv = -t.powf(alpha) - d * lt + poly;
                        let jac: f64 = l.iter().zip(u).map(|(li, ui)| th.ln() + (th - 1.0) * li.ln() - ui.ln()).sum();
                        deriv + jac
                    }
                    Family::Frank => {
                        // z = h^{1-d} Π (1 - e^{-θ u_i}), h = 1 - e^{-θ}
                        let ln_h = ln_one_minus_exp_neg(th);
                        let ln_a: Vec<f64> = u.iter().map(|&x| ln_one_minus_exp_neg(th * x)).collect();
                        let ln_z = (1.0 - d) * ln_h + ln_a.iter().sum::<f64>();
                        let n = self.dim - 1;
                        let num = log_sum_exp(log_coeffs.iter().enumerate().map(|(k, c)| c + (k + 1) as f64 * ln_z));
                        let li = num - (n as f64 + 1.0) * ln_one_minus_exp_neg(-ln_z);
                        let jac: f64 = u.iter().zip(&ln_a).map(|(x, la)| th.ln() - th * x - la).sum();
                        li - th.ln() + jac
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Draw `count` points from the copula.
    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    fn sample_one(&self, rng: &mut impl Rng) -> Vec<f64> {
        match &self.kind {
            Kind::Elliptical { chol, dof, .. } => {
                let e = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let mut z = chol.l() * e;
                if let Some(v) = dof {
                    let w: f64 = ChiSquared::new(*v).expect("positive dof").sample(rng);
                    z *= (v / w).sqrt();
                }
                self.from_latent(z.as_slice())
            }
            Kind::Archimedean { theta, .. } => {
                let th = *theta;
                let v = match self.family {
                    Family::Clayton => Gamma::new(1.0 / th, 1.0).expect("positive shape").sample(rng),
                    Family::Gumbel => positive_stable(1.0 / th, rng),
                    Family::Frank => log_series(-(-th).exp_m1(), th, rng) as f64,
                    _ => unreachable!(),
                };
                (0..self.dim)
                    .map(|_| {
                        let t = rng.sample::<f64, _>(Exp1) / v;
                        let u = match self.family {
                            Family::Clayton => (1.0 + t).powf(-1.0 / th),
                            Family::Gumbel => (-t.powf(1.0 / th)).exp(),
                            _ => -(-(-(-th).exp_m1()) * (-t).exp()).ln_1p() / th,
                        };
                        u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
                    })
                    .collect()
            }
        }
    }

    /// Draw the leading `dim − k` coordinates given the trailing `k` (as
    /// uniforms). Elliptical families only.
    pub fn conditional_sample(&self, given: &[f64], count: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
        let latent = self.to_latent(given);
        let z = self.conditional_latent(&latent, count, rng)?;
        Ok(z.iter().map(|row| self.from_latent(row)).collect())
    }

    /// Conditional draws on the latent scale: the normal or t conditional of
    /// the leading block given the trailing latent values.
    pub fn conditional_latent(&self, given: &[f64], count: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
        let Kind::Elliptical { corr, dof, .. } = &self.kind else {
            return Err(Error::input(format!("closed-form conditioning needs an elliptical copula, not {}", self.family)));
        };
        let k = given.len();
        if k == 0 || k >= self.dim {
            return Err(Error::input(format!("cannot condition on {k} of {} coordinates", self.dim)));
        }
        if given.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("conditioning values must be finite"));
        }
        let m = self.dim - k;
        let s11 = corr.view((0, 0), (m, m)).into_owned();
        let s12 = corr.view((0, m), (m, k)).into_owned();
        let s22 = corr.view((m, m), (k, k)).into_owned();
        let c22 = Cholesky::new(s22).ok_or_else(|| Error::Fit("conditioning block not positive definite".into()))?;
        let z2 = DVector::from_column_slice(given);
        let w = c22.solve(&z2);
        let mean = &s12 * &w;
        let gain = c22.solve(&s12.transpose());
        let cov = &s11 - &s12 * gain;
        let cov = (&cov + cov.transpose()) * 0.5;
        let lc = Cholesky::new(cov).ok_or_else(|| Error::Fit("conditional covariance not positive definite".into()))?.l();
        let (scale, dof_c) = match dof {
            Some(v) => (((v + z2.dot(&w)) / (v + k as f64)).sqrt(), Some(v + k as f64)),
            None => (1.0, None),
        };
        Ok((0..count)
            .map(|_| {
                let e = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
                let mut x = &lc * e * scale;
                if let Some(vc) = dof_c {
                    let chi: f64 = ChiSquared::new(vc).expect("positive dof").sample(rng);
                    x *= (vc / chi).sqrt();
                }
                (x + &mean).as_slice().to_vec()
            })
            .collect())
    }
}

/// Positive stable variable with Laplace transform `exp(-s^α)` (Kanter).
fn positive_stable(alpha: f64, rng: &mut impl Rng) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u: f64 = rng.random_range(f64::EPSILON..PI);
    let e: f64 = rng.sample(Exp1);
    let a = ((alpha * u).sin().powf(alpha) * ((1.0 - alpha) * u).sin().powf(1.0 - alpha) / u.sin()).powf(1.0 / (1.0 - alpha));
    (a / e).powf((1.0 - alpha) / alpha)
}

/// Logarithmic-series variable with parameter `p = 1 − e^{−θ}` (Kemp's LK method).
fn log_series(p: f64, theta: f64, rng: &mut impl Rng) -> u64 {
    let v: f64 = rng.random();
    if v > p {
        return 1;
    }
    let u: f64 = rng.random();
    let q = -(-theta * u).exp_m1();
    if v < q * q {
        let k = 1.0 + v.ln() / q.ln();
        return if k.is_finite() { k.floor().max(1.0) as u64 } else { 1 };
    }
    if v > q {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gumbel_coefficients_low_order() {
        // |ψ''| = e^{-y} t^{-2} (α(1-α) y + α² y²), y = t^α
        let a = gumbel_coefficients(2, 0.4);
        assert!((a[0] - 0.4 * 0.6).abs() < 1e-15);
        assert!((a[1] - 0.16).abs() < 1e-15);
        // independence: only the top coefficient survives
        let a = gumbel_coefficients(5, 1.0);
        assert_eq!(&a[..4], &[0.0; 4]);
        assert_eq!(a[4], 1.0);
    }

    #[test]
    fn eulerian_numbers() {
        assert_eq!(eulerian_row(1), vec![1.0]);
        assert_eq!(eulerian_row(3), vec![1.0, 4.0, 1.0]);
        assert_eq!(eulerian_row(4), vec![1.0, 11.0, 11.0, 1.0]);
        assert_eq!(eulerian_row(9).iter().sum::<f64>(), 362880.0);
    }

    #[test]
    fn family_names_parse() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!("StudentT".parse::<Family>().unwrap(), Family::StudentT);
        assert!("vine".parse::<Family>().is_err());
    }
}
