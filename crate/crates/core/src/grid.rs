//! Test-system description: network, resources, forecasts, and DC shift factors.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_stats::ClassForecast;

/// One piece `slope·P + intercept` of a convex generation cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    /// $/MWh
    pub slope: f64,
    /// $/h
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    /// 1-based bus number.
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// MW/s
    pub ramp: f64,
    pub cost_segments: Vec<CostSegment>,
    /// $/MW of mileage.
    pub mileage_cost: f64,
    /// Dispatch before the first roll. Solved for when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_init: Option<f64>,
}

impl GeneratorSpec {
    /// Hourly cost rate at output `p`, $/h.
    pub fn cost_rate(&self, p: f64) -> f64 {
        self.cost_segments.iter().map(|s| s.slope * p + s.intercept).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssSpec {
    pub id: String,
    pub bus: usize,
    /// Charge and discharge limit, MW.
    pub p_cap: f64,
    /// MWh.
    pub energy_cap: f64,
    /// MW/s
    pub ramp: f64,
    pub eta_d: f64,
    pub eta_c: f64,
    /// $/MWh
    pub degradation_cost: f64,
    /// $/MW
    pub mileage_cost: f64,
    pub soc_init: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Net output (discharge positive) before the first roll.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_init: Option<f64>,
}

impl EssSpec {
    /// Energy capacity in MW·s.
    pub fn energy_cap_mws(&self) -> f64 {
        self.energy_cap * 3600.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub from: usize,
    pub to: usize,
    /// Per unit on the network MVA base.
    pub reactance: f64,
    /// MW
    pub capacity: f64,
}

/// Share of the aggregate load forecast drawn at one bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub bus: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub bus_count: usize,
    pub slack_bus: usize,
    pub mva_base: f64,
    pub lines: Vec<LineSpec>,
    pub loads: Vec<LoadSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenewableKind {
    Wind,
    Pv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableSpec {
    pub id: String,
    pub bus: usize,
    pub kind: RenewableKind,
    /// Installed capacity, MW.
    pub capacity: f64,
}

/// Per-interval forecasts: `load[n][b]` per bus (0-based bus index) and
/// `renewable[n][r]` per plant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForecastSet {
    pub load: Vec<Vec<f64>>,
    pub renewable: Vec<Vec<f64>>,
}

impl ForecastSet {
    pub fn horizon(&self) -> usize {
        self.load.len()
    }

    pub fn total_load(&self, n: usize) -> f64 {
        self.load[n].iter().sum()
    }

    pub fn total_renewable(&self, n: usize) -> f64 {
        self.renewable[n].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    /// Free-form provenance notes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub network: NetworkSpec,
    pub generators: Vec<GeneratorSpec>,
    pub esses: Vec<EssSpec>,
    pub renewables: Vec<RenewableSpec>,
    pub forecasts: ForecastSet,
}

const BUNDLED: [(&str, &str); 2] =
    [("ieee118_reg", include_str!("../cases/ieee118_reg.json")), ("reduced10", include_str!("../cases/reduced10.json"))];

/// Names of the cases compiled into the library.
pub fn bundled_case_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// Parse and validate a bundled case by name (with or without `.json`).
pub fn bundled_case(name: &str) -> Result<GridCase> {
    let stem = name.strip_suffix(".json").unwrap_or(name);
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == stem)
        .ok_or_else(|| Error::input(format!("no bundled case `{name}`; available: {}", bundled_case_names().join(", "))))?;
    GridCase::from_json(text)
}

/// Load a case from a file path, or a bundled case when the path does not
/// exist but names one.
pub fn load_case(path: &Path) -> Result<GridCase> {
    match std::fs::read_to_string(path) {
        Ok(text) => GridCase::from_json(&text).map_err(|e| match e {
            Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
            other => other,
        }),
        Err(e) => {
            let name = path.to_string_lossy();
            if BUNDLED.iter().any(|(n, _)| name == *n || name.strip_suffix(".json") == Some(n)) {
                bundled_case(&name)
            } else {
                Err(Error::io(path, e))
            }
        }
    }
}

pub fn save_case(path: &Path, case: &GridCase) -> Result<()> {
    std::fs::write(path, case.to_json()?).map_err(|e| Error::io(path, e))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Input(msg()))
    }
}

impl GridCase {
    pub fn from_json(text: &str) -> Result<Self> {
        let case: GridCase = serde_json::from_str(text).map_err(|e| Error::Input(format!("schema: {e}")))?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn frr_count(&self) -> usize {
        self.generators.len() + self.esses.len()
    }

    /// Check every invariant; messages name the offending field.
    pub fn validate(&self) -> Result<()> {
        let net = &self.network;
        let nb = net.bus_count;
        ensure(nb >= 1, || "network.bus_count must be at least 1".into())?;
        let bus_ok = |b: usize| (1..=nb).contains(&b);
        ensure(bus_ok(net.slack_bus), || format!("network.slack_bus: bus {} outside 1..={nb}", net.slack_bus))?;
        ensure(net.mva_base > 0.0, || "network.mva_base must be positive".into())?;
        for (i, l) in net.lines.iter().enumerate() {
            let p = format!("network.lines[{i}]");
            ensure(bus_ok(l.from) && bus_ok(l.to), || format!("{p}: bus outside 1..={nb}"))?;
            ensure(l.from != l.to, || format!("{p}: from and to are both bus {}", l.from))?;
            ensure(l.reactance > 0.0 && l.reactance.is_finite(), || format!("{p}.reactance must be positive"))?;
            ensure(l.capacity > 0.0, || format!("{p}.capacity must be positive"))?;
        }
        ensure(is_connected(nb, &net.lines), || "network: graph is disconnected".into())?;
        for (i, l) in net.loads.iter().enumerate() {
            ensure(bus_ok(l.bus), || format!("network.loads[{i}].bus {} outside 1..={nb}", l.bus))?;
            ensure(l.weight >= 0.0 && l.weight.is_finite(), || format!("network.loads[{i}].weight must be non-negative"))?;
        }
        ensure(net.loads.is_empty() || net.loads.iter().map(|l| l.weight).sum::<f64>() > 0.0, || {
            "network.loads: weights sum to zero".into()
        })?;

        let mut ids = HashSet::new();
        ensure(self.frr_count() >= 1, || "case has no generators or ESSs".into())?;
        for (i, g) in self.generators.iter().enumerate() {
            let p = format!("generators[{i}] ({})", g.id);
            ensure(ids.insert(g.id.clone()), || format!("{p}: duplicate id"))?;
            ensure(bus_ok(g.bus), || format!("{p}.bus {} outside 1..={nb}", g.bus))?;
            ensure(g.p_min.is_finite() && g.p_max.is_finite(), || format!("{p}: non-finite limits"))?;
            ensure(g.p_min <= g.p_max, || format!("{p}: p_min {} > p_max {}", g.p_min, g.p_max))?;
            ensure(g.ramp > 0.0, || format!("{p}.ramp must be positive"))?;
            ensure(g.mileage_cost >= 0.0, || format!("{p}.mileage_cost must be non-negative"))?;
            ensure(!g.cost_segments.is_empty(), || format!("{p}.cost_segments is empty"))?;
            for (k, s) in g.cost_segments.iter().enumerate() {
                ensure(s.slope.is_finite() && s.intercept.is_finite(), || format!("{p}.cost_segments[{k}] not finite"))?;
                if k > 0 {
                    ensure(s.slope > g.cost_segments[k - 1].slope, || {
                        format!("{p}.cost_segments[{k}]: slopes must strictly increase (convex cost)")
                    })?;
                }
            }
            if let Some(p0) = g.p_init {
                ensure(p0 >= g.p_min && p0 <= g.p_max, || format!("{p}.p_init {p0} outside [p_min, p_max]"))?;
            }
        }
        for (i, e) in self.esses.iter().enumerate() {
            let p = format!("esses[{i}] ({})", e.id);
            ensure(ids.insert(e.id.clone()), || format!("{p}: duplicate id"))?;
            ensure(bus_ok(e.bus), || format!("{p}.bus {} outside 1..={nb}", e.bus))?;
            ensure(e.p_cap > 0.0 && e.energy_cap > 0.0 && e.ramp > 0.0, || format!("{p}: p_cap, energy_cap and ramp must be positive"))?;
            for (n, v) in [("eta_d", e.eta_d), ("eta_c", e.eta_c)] {
                ensure(v > 0.0 && v <= 1.0, || format!("{p}.{n} = {v} outside (0,1]"))?;
            }
            ensure(
                (0.0..=1.0).contains(&e.soc_min) && (0.0..=1.0).contains(&e.soc_max) && e.soc_min <= e.soc_init && e.soc_init <= e.soc_max,
                || format!("{p}: need 0 <= soc_min <= soc_init <= soc_max <= 1"),
            )?;
            ensure(e.degradation_cost >= 0.0 && e.mileage_cost >= 0.0, || format!("{p}: costs must be non-negative"))?;
            if let Some(p0) = e.p_init {
                ensure(p0.abs() <= e.p_cap, || format!("{p}.p_init {p0} exceeds p_cap"))?;
            }
        }
        for (i, r) in self.renewables.iter().enumerate() {
            let p = format!("renewables[{i}] ({})", r.id);
            ensure(ids.insert(r.id.clone()), || format!("{p}: duplicate id"))?;
            ensure(bus_ok(r.bus), || format!("{p}.bus {} outside 1..={nb}", r.bus))?;
            ensure(r.capacity >= 0.0 && r.capacity.is_finite(), || format!("{p}.capacity must be non-negative"))?;
        }
        let f = &self.forecasts;
        ensure(f.load.len() == f.renewable.len(), || "forecasts: load and renewable horizons differ".into())?;
        for (n, row) in f.load.iter().enumerate() {
            ensure(row.len() == nb, || format!("forecasts.load[{n}]: expected {nb} buses, got {}", row.len()))?;
            ensure(row.iter().all(|v| v.is_finite()), || format!("forecasts.load[{n}]: non-finite value"))?;
        }
        for (n, row) in f.renewable.iter().enumerate() {
            ensure(row.len() == self.renewables.len(), || {
                format!("forecasts.renewable[{n}]: expected {} plants, got {}", self.renewables.len(), row.len())
            })?;
            ensure(row.iter().all(|v| *v >= 0.0 && v.is_finite()), || format!("forecasts.renewable[{n}]: values must be non-negative"))?;
        }
        Ok(())
    }

    /// Spread aggregate forecasts over buses and plants: load by bus weight,
    /// PV and wind by installed capacity within each class (clipped at capacity).
    pub fn distribute(&self, points: &[ClassForecast]) -> ForecastSet {
        let nb = self.network.bus_count;
        let wsum: f64 = self.network.loads.iter().map(|l| l.weight).sum();
        let cap_of = |k: RenewableKind| self.renewables.iter().filter(|r| r.kind == k).map(|r| r.capacity).sum::<f64>();
        let (cap_pv, cap_wind) = (cap_of(RenewableKind::Pv), cap_of(RenewableKind::Wind));
        let mut out = ForecastSet::default();
        for p in points {
            let mut load = vec![0.0; nb];
            for l in &self.network.loads {
                load[l.bus - 1] += p.load * l.weight / wsum;
            }
            let ren = self
                .renewables
                .iter()
                .map(|r| {
                    let (total, cap) = match r.kind {
                        RenewableKind::Pv => (p.pv, cap_pv),
                        RenewableKind::Wind => (p.wind, cap_wind),
                    };
                    if cap > 0.0 {
                        (total.max(0.0) * r.capacity / cap).min(r.capacity)
                    } else {
                        0.0
                    }
                })
                .collect();
            out.load.push(load);
            out.renewable.push(ren);
        }
        out
    }
}

fn is_connected(nb: usize, lines: &[LineSpec]) -> bool {
    let mut adj = vec![Vec::new(); nb];
    for l in lines {
        adj[l.from - 1].push(l.to - 1);
        adj[l.to - 1].push(l.from - 1);
    }
    let mut seen = vec![false; nb];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// DC shift factors (lines × buses): MW on each line per MW injected at a bus
/// and withdrawn at the slack. Positive flow runs from `from` to `to`.
pub fn compute_shift_factors(net: &NetworkSpec) -> Result<DMatrix<f64>> {
    let nb = net.bus_count;
    let slack = net.slack_bus - 1;
    let reduced = |b: usize| {
        if b < slack {
            Some(b)
        } else if b > slack {
            Some(b - 1)
        } else {
            None
        }
    };
    let m = nb - 1;
    let mut bred = DMatrix::<f64>::zeros(m, m);
    for l in &net.lines {
        let b = 1.0 / l.reactance;
        let (f, t) = (reduced(l.from - 1), reduced(l.to - 1));
        if let Some(f) = f {
            bred[(f, f)] += b;
        }
        if let Some(t) = t {
            bred[(t, t)] += b;
        }
        if let (Some(f), Some(t)) = (f, t) {
            bred[(f, t)] -= b;
            bred[(t, f)] -= b;
        }
    }
    let x = if m == 0 {
        DMatrix::zeros(0, 0)
    } else {
        bred.lu().try_inverse().ok_or_else(|| Error::Topology("reduced susceptance matrix is singular".into()))?
    };
    let mut sf = DMatrix::<f64>::zeros(net.lines.len(), nb);
    for (li, l) in net.lines.iter().enumerate() {
        let b = 1.0 / l.reactance;
        for bus in 0..nb {
            let Some(k) = reduced(bus) else { continue };
            let xf = reduced(l.from - 1).map_or(0.0, |f| x[(f, k)]);
            let xt = reduced(l.to - 1).map_or(0.0, |t| x[(t, k)]);
            sf[(li, bus)] = b * (xf - xt);
        }
    }
    Ok(sf)
}

/// A validated case together with its shift-factor matrix.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub case: GridCase,
    pub sf: DMatrix<f64>,
}

impl GridModel {
    pub fn new(case: GridCase) -> Result<Self> {
        case.validate()?;
        let sf = compute_shift_factors(&case.network)?;
        Ok(Self { case, sf })
    }

    /// Line flows for a per-bus net injection vector (0-based buses).
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        (0..self.sf.nrows()).map(|l| (0..self.sf.ncols()).map(|b| self.sf[(l, b)] * injection[b]).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(from: usize, to: usize) -> LineSpec {
        LineSpec { from, to, reactance: 0.1, capacity: 100.0 }
    }

    fn net(nb: usize, lines: Vec<LineSpec>) -> NetworkSpec {
        NetworkSpec { bus_count: nb, slack_bus: 1, mva_base: 100.0, lines, loads: vec![] }
    }

    #[test]
    fn two_bus_shift_factor() {
        let sf = compute_shift_factors(&net(2, vec![line(1, 2)])).unwrap();
        assert_eq!(sf[(0, 0)], 0.0);
        assert!((sf[(0, 1)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_bus_ring_split() {
        let sf = compute_shift_factors(&net(3, vec![line(1, 2), line(2, 3), line(3, 1)])).unwrap();
        // injection at bus 2: direct path 2->1 carries 2/3, the path through 3 carries 1/3
        assert!((sf[(0, 1)] + 2.0 / 3.0).abs() < 1e-12);
        assert!((sf[(1, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((sf[(2, 1)] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_network_rejected() {
        assert!(!is_connected(3, &[line(1, 2)]));
    }

    #[test]
    fn bundled_cases_validate() {
        for name in bundled_case_names() {
            let c = bundled_case(name).unwrap();
            GridModel::new(c).unwrap();
        }
    }
}
