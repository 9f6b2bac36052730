//! Per-interval statistics of AGC regulation signals and forecast variations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of components in the statistics vector ξ.
pub const XI_DIM: usize = 7;

/// Component names of ξ in their fixed order.
pub const XI_NAMES: [&str; XI_DIM] = ["e_plus", "e_minus", "mileage", "ma_plus", "ma_minus", "rr_plus", "rr_minus"];

/// Regulation commands sampled every `tau` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgcSeries {
    /// Signed regulation command in MW per AGC period.
    pub values: Vec<f64>,
    /// Seconds per AGC period.
    pub tau: f64,
    /// Timestamp of the first value, in seconds.
    pub start_time: f64,
}

impl AgcSeries {
    pub fn new(values: Vec<f64>, tau: f64, start_time: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("AGC series is empty"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::input(format!("AGC period must be positive, got {tau}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("AGC value {i} is not finite")));
        }
        Ok(Self { values, tau, start_time })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatConfig {
    pub tau_s: f64,
    pub t_s: f64,
    pub alpha_ma: f64,
    pub alpha_rr: f64,
}

impl Default for StatConfig {
    fn default() -> Self {
        Self { tau_s: 4.0, t_s: 300.0, alpha_ma: 0.7, alpha_rr: 0.7 }
    }
}

impl StatConfig {
    /// AGC periods per RTED interval.
    pub fn periods(&self) -> Result<usize> {
        let r = self.t_s / self.tau_s;
        let k = r.round();
        if !(self.tau_s > 0.0) || k < 1.0 || (r - k).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::input(format!("T = {} s is not a positive multiple of tau = {} s", self.t_s, self.tau_s)));
        }
        for (name, a) in [("alpha_ma", self.alpha_ma), ("alpha_rr", self.alpha_rr)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::input(format!("{name} must lie in (0,1), got {a}")));
            }
        }
        Ok(k as usize)
    }
}

/// Statistics ξ of one RTED interval plus the up/down signal counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalStats {
    /// Upward regulation energy, MW·s.
    pub e_plus: f64,
    /// Downward regulation energy, MW·s.
    pub e_minus: f64,
    /// Regulation mileage, MW.
    pub mileage: f64,
    pub ma_plus: f64,
    pub ma_minus: f64,
    /// Regulation-rate quantiles, MW/s.
    pub rr_plus: f64,
    pub rr_minus: f64,
    pub kappa_plus: f64,
    pub x_plus: usize,
    pub x_minus: usize,
}

impl IntervalStats {
    pub fn xi(&self) -> [f64; XI_DIM] {
        [self.e_plus, self.e_minus, self.mileage, self.ma_plus, self.ma_minus, self.rr_plus, self.rr_minus]
    }

    /// Build from a ξ vector. Counts are unknown, so `kappa_plus` is supplied directly.
    pub fn from_xi(xi: &[f64; XI_DIM], kappa_plus: f64) -> Self {
        Self {
            e_plus: xi[0],
            e_minus: xi[1],
            mileage: xi[2],
            ma_plus: xi[3],
            ma_minus: xi[4],
            rr_plus: xi[5],
            rr_minus: xi[6],
            kappa_plus,
            x_plus: 0,
            x_minus: 0,
        }
    }
}

/// Change of forecast load / PV / wind over one interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerVariation {
    pub d_load: f64,
    pub d_pv: f64,
    pub d_wind: f64,
}

impl PowerVariation {
    pub fn as_array(&self) -> [f64; 3] {
        [self.d_load, self.d_pv, self.d_wind]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { d_load: a[0], d_pv: a[1], d_wind: a[2] }
    }
}

/// Aggregate forecasts of one class-split snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassForecast {
    pub load: f64,
    pub pv: f64,
    pub wind: f64,
}

/// Forecast stream sampled once per RTED interval.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub timestamps: Vec<f64>,
    pub points: Vec<ClassForecast>,
}

impl ForecastSeries {
    /// ΔP of interval `n`: forecast at the start of `n+1` minus forecast at the start of `n`.
    pub fn variation(&self, n: usize) -> Result<PowerVariation> {
        match (self.points.get(n), self.points.get(n + 1)) {
            (Some(a), Some(b)) => power_variation(a, b),
            _ => Err(Error::input(format!("forecast stream has no interval {n}"))),
        }
    }

    pub fn variations(&self) -> Result<Vec<PowerVariation>> {
        (0..self.points.len().saturating_sub(1)).map(|n| self.variation(n)).collect()
    }
}

/// Smallest element `x` of the ascending `sorted` pool such that at least a
/// fraction `alpha` of the pool is `<= x`. An empty pool gives 0.
pub fn nearest_rank(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut k = ((alpha * nf).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= alpha {
        k -= 1;
    }
    while k < n && (k as f64) / nf < alpha {
        k += 1;
    }
    sorted[k - 1]
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Statistics of one interval's signal segment, with `prev_last` the final
/// command of the previous interval.
pub fn compute_interval_stats(segment: &[f64], prev_last: f64, cfg: &StatConfig) -> Result<IntervalStats> {
    if segment.is_empty() {
        return Err(Error::input("empty AGC segment"));
    }
    if !prev_last.is_finite() || segment.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite AGC value"));
    }
    let tau = cfg.tau_s;
    let mut e_plus = 0.0;
    let mut e_minus = 0.0;
    let mut mileage = 0.0;
    let mut ups = Vec::new();
    let mut downs = Vec::new();
    let mut ramp_up = Vec::new();
    let mut ramp_down = Vec::new();
    let mut prev = prev_last;
    for &v in segment {
        if v > 0.0 {
            e_plus += v;
            ups.push(v);
        } else if v < 0.0 {
            e_minus -= v;
            downs.push(-v);
        }
        let d = v - prev;
        mileage += d.abs();
        if d > 0.0 {
            ramp_up.push(d / tau);
        } else if d < 0.0 {
            ramp_down.push(-d / tau);
        }
        prev = v;
    }
    let (x_plus, x_minus) = (ups.len(), downs.len());
    let kappa_plus = if x_plus + x_minus > 0 { x_plus as f64 / (x_plus + x_minus) as f64 } else { 0.0 };
    Ok(IntervalStats {
        e_plus: tau * e_plus,
        e_minus: tau * e_minus,
        mileage,
        ma_plus: nearest_rank(&sorted(ups), cfg.alpha_ma),
        ma_minus: nearest_rank(&sorted(downs), cfg.alpha_ma),
        rr_plus: nearest_rank(&sorted(ramp_up), cfg.alpha_rr),
        rr_minus: nearest_rank(&sorted(ramp_down), cfg.alpha_rr),
        kappa_plus,
        x_plus,
        x_minus,
    })
}

/// Window a series into consecutive RTED intervals, chaining the last command
/// of each window into the next. The first window starts from its own first value.
pub fn split_into_intervals(series: &AgcSeries, cfg: &StatConfig) -> Result<Vec<IntervalStats>> {
    if (series.tau - cfg.tau_s).abs() > 1e-12 * cfg.tau_s {
        return Err(Error::input(format!("series period {} s differs from configured {} s", series.tau, cfg.tau_s)));
    }
    let w = cfg.periods()?;
    if !series.values.len().is_multiple_of(w) {
        return Err(Error::input(format!("series length {} is not a multiple of {} periods per interval", series.values.len(), w)));
    }
    let mut prev = series.values[0];
    series
        .values
        .chunks(w)
        .map(|chunk| {
            let s = compute_interval_stats(chunk, prev, cfg);
            prev = chunk[w - 1];
            s
        })
        .collect()
}

pub fn power_variation(start: &ClassForecast, next: &ClassForecast) -> Result<PowerVariation> {
    let pv = PowerVariation { d_load: next.load - start.load, d_pv: next.pv - start.pv, d_wind: next.wind - start.wind };
    if pv.as_array().iter().all(|v| v.is_finite()) {
        Ok(pv)
    } else {
        Err(Error::input("non-finite forecast"))
    }
}

/// Pearson correlation coefficient of two equal-length sequences.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::input(format!("pearson needs two equal-length sequences of >= 2 values, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::input("correlation undefined: zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Deserialize)]
struct AgcRow {
    timestamp: f64,
    mw: f64,
}

#[derive(Deserialize)]
struct ForecastRow {
    timestamp: f64,
    load_mw: f64,
    pv_mw: f64,
    wind_mw: f64,
}

fn check_uniform(ts: &[f64], what: &str) -> Result<f64> {
    if ts.len() < 2 {
        return Err(Error::input(format!("{what}: need at least two rows")));
    }
    let step = ts[1] - ts[0];
    if !(step > 0.0) {
        return Err(Error::input(format!("{what}: timestamps must increase")));
    }
    for (i, w) in ts.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(Error::input(format!("{what}: irregular spacing at row {}", i + 2)));
        }
    }
    Ok(step)
}

/// Read `timestamp,mw` rows. The period is inferred from the timestamps.
pub fn read_agc_csv(path: &Path) -> Result<AgcSeries> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let mut ts = Vec::new();
    let mut vals = Vec::new();
    for (i, row) in rdr.deserialize::<AgcRow>().enumerate() {
        let row = row.map_err(|e| Error::Input(format!("{} row {}: {e}", path.display(), i + 2)))?;
        ts.push(row.timestamp);
        vals.push(row.mw);
    }
    let tau = check_uniform(&ts, &path.display().to_string())?;
    AgcSeries::new(vals, tau, ts[0])
}

pub fn write_agc_csv(path: &Path, series: &AgcSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    w.write_record(["timestamp", "mw"])?;
    for (i, v) in series.values.iter().enumerate() {
        w.write_record([(series.start_time + i as f64 * series.tau).to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read `timestamp,load_mw,pv_mw,wind_mw` rows at a fixed RTED spacing.
pub fn read_forecast_csv(path: &Path) -> Result<ForecastSeries> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let mut out = ForecastSeries::default();
    for (i, row) in rdr.deserialize::<ForecastRow>().enumerate() {
        let r = row.map_err(|e| Error::Input(format!("{} row {}: {e}", path.display(), i + 2)))?;
        if ![r.load_mw, r.pv_mw, r.wind_mw].iter().all(|v| v.is_finite()) {
            return Err(Error::Input(format!("{} row {}: non-finite value", path.display(), i + 2)));
        }
        out.timestamps.push(r.timestamp);
        out.points.push(ClassForecast { load: r.load_mw, pv: r.pv_mw, wind: r.wind_mw });
    }
    check_uniform(&out.timestamps, &path.display().to_string())?;
    Ok(out)
}

pub fn write_forecast_csv(path: &Path, f: &ForecastSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    w.write_record(["timestamp", "load_mw", "pv_mw", "wind_mw"])?;
    for (t, p) in f.timestamps.iter().zip(&f.points) {
        w.write_record([t.to_string(), p.load.to_string(), p.pv.to_string(), p.wind.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per interval with the ξ columns followed by `kappa_plus`.
pub fn write_stats_csv(path: &Path, stats: &[IntervalStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let mut header: Vec<&str> = XI_NAMES.to_vec();
    header.push("kappa_plus");
    w.write_record(&header)?;
    for s in stats {
        let mut rec: Vec<String> = s.xi().iter().map(|v| v.to_string()).collect();
        rec.push(s.kappa_plus.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
