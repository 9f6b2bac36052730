use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridCase, RenewableKind};
use crate::signal_stats::{AgcSeries, ClassForecast, ForecastSeries, StatConfig};

/// RTED intervals per day at the default 5-minute resolution.
const INTERVALS_PER_DAY: f64 = 288.0;

/// Parameters of the synthetic AGC and forecast generator.
///
/// The AGC command is an Ornstein-Uhlenbeck process at `tau_s` resolution
/// whose mean in interval `n` is `coupling · ΔP_net(n) + η_n` with
/// `η_n ~ N(0, drift_noise)`, where `ΔP_net = ΔP_load − ΔP_pv − ΔP_wind`.
/// Setting `coupling` to zero makes ξ independent of ΔP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub intervals: usize,
    pub t_s: f64,
    pub tau_s: f64,
    /// Mean system load, MW.
    pub base_load: f64,
    /// Daily load swing (half peak-to-trough), MW.
    pub diurnal_amplitude: f64,
    /// Standard deviation of the per-interval load innovation, MW.
    pub load_noise: f64,
    pub pv_capacity: f64,
    pub wind_capacity: f64,
    /// AGC drift per MW of net-load change.
    pub coupling: f64,
    /// Standard deviation of the drift noise η, MW.
    pub drift_noise: f64,
    /// Mean-reversion rate of the AGC process, 1/s.
    pub reversion: f64,
    /// Stationary standard deviation of the AGC process around its drift, MW.
    pub agc_std: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            intervals: 600,
            t_s: 300.0,
            tau_s: 4.0,
            base_load: 540.0,
            diurnal_amplitude: 50.0,
            load_noise: 6.0,
            pv_capacity: 80.0,
            wind_capacity: 150.0,
            coupling: 1.0,
            drift_noise: 8.0,
            reversion: 1.0 / 30.0,
            agc_std: 6.0,
        }
    }
}

impl SynthConfig {
    /// Defaults scaled to a case: mean of its forecast load, and its PV and wind capacities.
    pub fn for_case(case: &GridCase, intervals: usize) -> Self {
        let f = &case.forecasts;
        let base_load = if f.horizon() > 0 {
            (0..f.horizon()).map(|n| f.total_load(n)).sum::<f64>() / f.horizon() as f64
        } else {
            SynthConfig::default().base_load
        };
        let cap = |k: RenewableKind| case.renewables.iter().filter(|r| r.kind == k).map(|r| r.capacity).sum::<f64>();
        Self {
            intervals,
            base_load,
            diurnal_amplitude: 0.1 * base_load,
            pv_capacity: cap(RenewableKind::Pv),
            wind_capacity: cap(RenewableKind::Wind),
            ..Self::default()
        }
    }

    pub fn stat_config(&self) -> StatConfig {
        StatConfig { tau_s: self.tau_s, t_s: self.t_s, ..StatConfig::default() }
    }
}

/// AGC commands and aggregate forecasts of one synthetic span. The forecast
/// stream has one more point than there are intervals so that every
/// interval has a ΔP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Streams {
    pub agc: AgcSeries,
    pub forecasts: ForecastSeries,
}

impl Streams {
    pub fn intervals(&self) -> usize {
        self.forecasts.points.len().saturating_sub(1)
    }
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std.max(0.0)).expect("finite standard deviation")
}

/// Generate a seeded span of AGC signals and forecasts.
pub fn synthesize_data(cfg: &SynthConfig, seed: u64) -> Result<Streams> {
    if cfg.intervals == 0 {
        return Err(Error::input("synthetic span must contain at least one interval"));
    }
    let per = cfg.stat_config().periods()?;
    for (name, v) in [("base_load", cfg.base_load), ("reversion", cfg.reversion)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::input(format!("{name} must be positive, got {v}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut points = Vec::with_capacity(cfg.intervals + 1);
    let (mut load_dev, mut cloud, mut wind) = (0.0, 0.85, 0.4);
    let load_step = normal(cfg.load_noise);
    let unit = normal(1.0);
    for n in 0..=cfg.intervals {
        let day_frac = (n as f64 / INTERVALS_PER_DAY).fract();
        load_dev = 0.97 * load_dev + load_step.sample(&mut rng);
        let load = cfg.base_load + cfg.diurnal_amplitude * (2.0 * PI * (day_frac - 0.3)).sin() + load_dev;
        cloud = (cloud + 0.03 * unit.sample(&mut rng)).clamp(0.5, 1.0);
        let sun = (PI * (day_frac * 24.0 - 6.0) / 12.0).sin().max(0.0);
        wind = (wind + 0.02 * (0.4 - wind) + 0.025 * unit.sample(&mut rng)).clamp(0.05, 0.95);
        points.push(ClassForecast { load: load.max(0.0), pv: cfg.pv_capacity * sun * cloud, wind: cfg.wind_capacity * wind });
    }
    let forecasts = ForecastSeries { timestamps: (0..=cfg.intervals).map(|n| n as f64 * cfg.t_s).collect(), points };

    // exact OU transition over one AGC period
    let decay = (-cfg.reversion * cfg.tau_s).exp();
    let step = normal(cfg.agc_std * (1.0 - decay * decay).sqrt());
    let drift_noise = normal(cfg.drift_noise);
    let mut values = Vec::with_capacity(cfg.intervals * per);
    let mut x = 0.0;
    for w in forecasts.points.windows(2) {
        let d_net = (w[1].load - w[0].load) - (w[1].pv - w[0].pv) - (w[1].wind - w[0].wind);
        let mean = cfg.coupling * d_net + drift_noise.sample(&mut rng);
        for _ in 0..per {
            x = mean + (x - mean) * decay + step.sample(&mut rng);
            values.push(x);
        }
    }
    let agc = AgcSeries::new(values, cfg.tau_s, 0.0)?;
    Ok(Streams { agc, forecasts })
}
