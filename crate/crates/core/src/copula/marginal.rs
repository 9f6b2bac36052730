use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest observations a marginal or copula fit accepts.
pub const MIN_OBSERVATIONS: usize = 30;

/// Empirical CDF on the `rank/(n+1)` grid with linear interpolation between
/// order statistics. Tied observations are spread symmetrically by a tiny
/// offset, so the support is strictly increasing and the CDF at a tied value
/// is its average rank over `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalModel {
    pub support: Vec<f64>,
}

/// Average ranks (1-based) of `x`.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Column-wise `rank/(n+1)` with average ranks for ties. `data` is row-major.
pub fn pseudo_observations(data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = data.len();
    if n == 0 {
        return vec![];
    }
    let d = data[0].len();
    let mut out = vec![vec![0.0; d]; n];
    for c in 0..d {
        let col: Vec<f64> = data.iter().map(|r| r[c]).collect();
        for (i, r) in average_ranks(&col).into_iter().enumerate() {
            out[i][c] = r / (n as f64 + 1.0);
        }
    }
    out
}

pub fn fit_marginal(observations: &[f64]) -> Result<MarginalModel> {
    if observations.len() < MIN_OBSERVATIONS {
        return Err(Error::Fit(format!("marginal needs at least {MIN_OBSERVATIONS} observations, got {}", observations.len())));
    }
    if observations.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("marginal observations must be finite".into()));
    }
    let mut x = observations.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let mut support = x.clone();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j > i {
            let m = (j - i + 1) as f64;
            let v = x[i];
            let below = if i > 0 { v - x[i - 1] } else { f64::INFINITY };
            let above = if j + 1 < n { x[j + 1] - v } else { f64::INFINITY };
            let room = below.min(above) / (2.0 * m);
            let step = (1e-9 * v.abs().max(1.0)).min(room);
            for (k, s) in support[i..=j].iter_mut().enumerate() {
                *s = v + (k as f64 - (m - 1.0) / 2.0) * step;
            }
        }
        i = j + 1;
    }
    Ok(MarginalModel { support })
}

impl MarginalModel {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    fn level(&self, k: usize) -> f64 {
        (k + 1) as f64 / (self.support.len() + 1) as f64
    }

    /// CDF, clamped to `[1/(n+1), n/(n+1)]` outside the observed range.
    pub fn cdf(&self, x: f64) -> f64 {
        let s = &self.support;
        let n = s.len();
        if x <= s[0] {
            return self.level(0);
        }
        if x >= s[n - 1] {
            return self.level(n - 1);
        }
        let k = s.partition_point(|&v| v <= x);
        let (x0, x1) = (s[k - 1], s[k]);
        let w = (x - x0) / (x1 - x0);
        self.level(k - 1) + w * (self.level(k) - self.level(k - 1))
    }

    /// Quantile, clamped to the smallest and largest observation.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let s = &self.support;
        let n = s.len();
        let pos = u * (n + 1) as f64 - 1.0;
        if !(pos > 0.0) {
            return s[0];
        }
        if pos >= (n - 1) as f64 {
            return s[n - 1];
        }
        let k = pos.floor() as usize;
        let w = pos - k as f64;
        s[k] + w * (s[k + 1] - s[k])
    }
}
