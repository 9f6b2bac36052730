#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rted_dro::dispatch::{certainty_equivalent_soc_change, chance_losses, cost_terms, generation_cost, Anchor, DispatchDecision, Frr};
use rted_dro::dro::AmbiguitySet;
use rted_dro::grid::{CostSegment, EssSpec, ForecastSet, GeneratorSpec, GridCase, GridModel, LineSpec, LoadSpec, NetworkSpec};
use rted_dro::signal_stats::IntervalStats;

pub fn generator(id: &str, bus: usize, p_min: f64, p_max: f64, ramp: f64, slopes: &[(f64, f64)], mileage: f64) -> GeneratorSpec {
    GeneratorSpec {
        id: id.into(),
        bus,
        p_min,
        p_max,
        ramp,
        cost_segments: slopes.iter().map(|&(slope, intercept)| CostSegment { slope, intercept }).collect(),
        mileage_cost: mileage,
        p_init: None,
    }
}

pub fn ess(id: &str, bus: usize, p_cap: f64, energy_mwh: f64, eta: f64) -> EssSpec {
    EssSpec {
        id: id.into(),
        bus,
        p_cap,
        energy_cap: energy_mwh,
        ramp: 4.0,
        eta_d: eta,
        eta_c: eta,
        degradation_cost: 200.0,
        mileage_cost: 10.0,
        soc_init: 0.5,
        soc_min: 0.1,
        soc_max: 0.9,
        p_init: None,
    }
}

/// Copper-plate case: every resource and the whole load at bus 1.
pub fn single_bus(generators: Vec<GeneratorSpec>, esses: Vec<EssSpec>, loads: &[f64]) -> GridCase {
    GridCase {
        name: "single".into(),
        notes: vec![],
        network: NetworkSpec { bus_count: 1, slack_bus: 1, mva_base: 100.0, lines: vec![], loads: vec![LoadSpec { bus: 1, weight: 1.0 }] },
        generators,
        esses,
        renewables: vec![],
        forecasts: ForecastSet { load: loads.iter().map(|&l| vec![l]).collect(), renewable: loads.iter().map(|_| vec![]).collect() },
    }
}

/// Generators at bus 1, load at bus 2, one line of the given capacity.
pub fn two_bus(generators: Vec<GeneratorSpec>, load: f64, capacity: f64) -> GridCase {
    GridCase {
        name: "two".into(),
        notes: vec![],
        network: NetworkSpec {
            bus_count: 2,
            slack_bus: 1,
            mva_base: 100.0,
            lines: vec![LineSpec { from: 1, to: 2, reactance: 0.1, capacity }],
            loads: vec![LoadSpec { bus: 2, weight: 1.0 }],
        },
        generators,
        esses: vec![],
        renewables: vec![],
        forecasts: ForecastSet { load: vec![vec![0.0, load]], renewable: vec![vec![]] },
    }
}

/// Three generators and one ESS on a copper plate, `horizon` intervals.
pub fn small_system(horizon: usize) -> GridModel {
    let gens = vec![
        generator("g1", 1, 20.0, 200.0, 0.2, &[(20.0, 0.0), (26.0, -600.0)], 2.0),
        generator("g2", 1, 10.0, 150.0, 0.4, &[(24.0, 0.0), (30.0, -450.0)], 4.0),
        generator("g3", 1, 5.0, 100.0, 0.8, &[(28.0, 0.0), (36.0, -400.0)], 8.0),
    ];
    let loads: Vec<f64> = (0..horizon).map(|n| 260.0 + 4.0 * n as f64).collect();
    GridModel::new(single_bus(gens, vec![ess("s1", 1, 20.0, 10.0, 0.95)], &loads)).unwrap()
}

/// Plausible ξ draws for an AGC signal of roughly ±20 MW.
pub fn xi_samples(seed: u64, y: usize) -> Vec<[f64; 7]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..y)
        .map(|_| {
            let ep: f64 = rng.random_range(0.0..4000.0);
            let em: f64 = rng.random_range(0.0..4000.0);
            let m: f64 = rng.random_range(20.0..200.0);
            [ep, em, m, rng.random_range(0.0..25.0), rng.random_range(0.0..25.0), rng.random_range(0.0..0.6), rng.random_range(0.0..0.6)]
        })
        .collect()
}

pub fn sets(seed: u64, horizon: usize, y: usize, epsilon: f64) -> Vec<AmbiguitySet> {
    (0..horizon).map(|n| AmbiguitySet::new(xi_samples(seed.wrapping_mul(31).wrapping_add(n as u64), y), epsilon)).collect()
}

/// Anchor at an even split of the first interval's load across generators.
pub fn flat_anchor(grid: &GridModel) -> Anchor {
    let case = &grid.case;
    let load = case.forecasts.total_load(0) - case.forecasts.total_renewable(0);
    let cap: f64 = case.generators.iter().map(|g| g.p_max).sum();
    let mut power: Vec<f64> = case.generators.iter().map(|g| g.p_max * load / cap).collect();
    power.extend(case.esses.iter().map(|_| 0.0));
    Anchor { power }
}

/// CVaR of equally likely losses: the mean of the worst `1 − beta` mass.
pub fn sorted_cvar(losses: &[f64], beta: f64) -> f64 {
    let mut l = losses.to_vec();
    l.sort_by(|a, b| b.total_cmp(a));
    let w = 1.0 / l.len() as f64;
    let mut left = 1.0 - beta;
    let mut acc = 0.0;
    for x in l {
        if left <= 0.0 {
            break;
        }
        let take = left.min(w);
        acc += take * x;
        left -= take;
    }
    acc / (1.0 - beta)
}

/// Sample-average objective of a fixed decision, computed term by term
/// without the LP: degradation, per-sample generation and mileage, and
/// `rho` times the sorted CVaR of every chance loss.
#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
pub fn saa_objective(
    grid: &GridModel,
    d: &DispatchDecision,
    anchor: &Anchor,
    soc0: &[f64],
    sets: &[AmbiguitySet],
    rho: f64,
    beta: f64,
    t_s: f64,
) -> f64 {
    let case = &grid.case;
    let zero = IntervalStats::from_xi(&[0.0; 7], 0.5);
    let mut total = cost_terms(d, case, &vec![zero; d.horizon()], t_s).degradation;
    let mut soc = soc0.to_vec();
    for n in 0..d.horizon() {
        let samples = &sets[n].samples;
        let y = samples.len() as f64;
        for xi in samples {
            let s = IntervalStats::from_xi(xi, 0.5);
            for (g, spec) in case.generators.iter().enumerate() {
                total += generation_cost(spec, d.p_gen[n][g], d.pf[n][g], &s, t_s) / y;
            }
            for i in 0..case.frr_count() {
                total += Frr::from_index(case, i).mileage_cost(case) * d.pf[n][i] * xi[2] / y;
            }
        }
        let prev = if n == 0 { anchor.power.clone() } else { d.frr_power(n - 1) };
        let per_sample: Vec<Vec<(usize, usize, f64)>> = samples.iter().map(|xi| chance_losses(d, case, n, &prev, &soc, xi, t_s)).collect();
        for k in 0..per_sample[0].len() {
            let losses: Vec<f64> = per_sample.iter().map(|v| v[k].2).collect();
            total += rho * sorted_cvar(&losses, beta);
        }
        let ep = samples.iter().map(|s| s[0]).sum::<f64>() / y;
        let em = samples.iter().map(|s| s[1]).sum::<f64>() / y;
        let g = case.generators.len();
        for (e, spec) in case.esses.iter().enumerate() {
            soc[e] -= certainty_equivalent_soc_change(d.p_dis[n][e], d.p_chg[n][e], d.pf[n][g + e], ep, em, spec, t_s);
        }
    }
    total
}
