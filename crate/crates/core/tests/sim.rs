mod common;

use common::{generator, sets, single_bus, small_system, xi_samples};
use proptest::prelude::*;
use rted_dro::copula::{average_ranks, fit_joint, FittedJointModel, JOINT_DIM};
use rted_dro::dispatch::DispatchDecision;
use rted_dro::dro::{solve_rted, AmbiguitySet, Formulation, RtedInputs};
use rted_dro::grid::{bundled_case, GridCase, GridModel};
use rted_dro::lp::HighsBackend;
use rted_dro::signal_stats::{pearson, AgcSeries, ClassForecast, ForecastSeries, IntervalStats, XI_DIM};
use rted_dro::sim::{
    evaluate_interval, prepare, read_report_json, run_rolling, run_rolling_with, synthesize_data, traditional_participation,
    write_costs_csv, write_report_json, write_summary_csv, ExperimentConfig, Forecaster, Method, RollStatus, RollingConfig, Streams,
    SynthConfig, Totals,
};

fn backend() -> HighsBackend {
    HighsBackend::default()
}

/// Constant AGC command `c` and constant aggregate forecasts over `intervals`.
fn flat_streams(intervals: usize, c: f64, point: ClassForecast) -> Streams {
    Streams {
        agc: AgcSeries::new(vec![c; intervals * 75], 4.0, 0.0).unwrap(),
        forecasts: ForecastSeries { timestamps: (0..=intervals).map(|n| n as f64 * 300.0).collect(), points: vec![point; intervals + 1] },
    }
}

fn zero_model() -> FittedJointModel {
    fit_joint(&vec![[0.0; JOINT_DIM]; 60], rted_dro::par::Exec::Sequential).unwrap()
}

fn reduced() -> GridModel {
    GridModel::new(bundled_case("reduced10").unwrap()).unwrap()
}

#[test]
fn zero_signal_collapses_all_methods() {
    let grid = reduced();
    let streams = flat_streams(10, 0.0, ClassForecast { load: 540.0, pv: 40.0, wind: 70.0 });
    let model = zero_model();
    let cfg = RollingConfig { rolls: Some(4), ..RollingConfig::default() };
    let totals: Vec<Totals> = Method::ALL
        .iter()
        .map(|&m| run_rolling(&grid, &streams, Some(&model), &RollingConfig { method: m, ..cfg.clone() }, &backend()).unwrap().totals)
        .collect();
    for t in &totals {
        assert!(t.mileage.abs() < 1e-6 && t.penalty == 0.0, "{t:?}");
        assert!((t.total - totals[2].total).abs() < 1e-7 * totals[2].total, "{t:?} vs {:?}", totals[2]);
        assert!((t.total - (t.generation + t.degradation)).abs() < 1e-6);
    }
}

#[test]
fn traditional_factors_follow_capacity() {
    let g = |id: &str, lo: f64, hi: f64, rr: f64| generator(id, 1, lo, hi, rr, &[(20.0, 0.0)], 1.0);
    let four = single_bus((0..4).map(|i| g(&format!("g{i}"), 0.0, 50.0, 1.0)).collect(), vec![], &[10.0]);
    assert_eq!(traditional_participation(&four, 300.0).unwrap(), vec![0.25; 4]);
    let caps = single_bus(vec![g("a", 0.0, 1.0, 10.0), g("b", 2.0, 5.0, 10.0)], vec![], &[1.0]);
    assert_eq!(traditional_participation(&caps, 300.0).unwrap(), vec![0.25, 0.75]);
    // ramp capacity binds for both: rr·T = 3 and 9 against ranges of 100
    let ramps = single_bus(vec![g("a", 0.0, 100.0, 0.01), g("b", 0.0, 100.0, 0.03)], vec![], &[1.0]);
    let pf = traditional_participation(&ramps, 300.0).unwrap();
    assert!((pf[0] - 0.25).abs() < 1e-15 && (pf[1] - 0.75).abs() < 1e-15);
    let dead = single_bus(vec![g("a", 5.0, 5.0, 1.0)], vec![], &[1.0]);
    assert!(traditional_participation(&dead, 300.0).is_err());
}

proptest! {
    #[test]
    fn traditional_factors_sum_to_one(spec in prop::collection::vec((0.0f64..50.0, 0.1f64..200.0, 0.001f64..2.0), 1..12)) {
        let gens = spec.iter().enumerate().map(|(i, &(lo, w, rr))| generator(&format!("g{i}"), 1, lo, lo + w, rr, &[(20.0, 0.0)], 1.0)).collect();
        let case = single_bus(gens, vec![common::ess("s", 1, 5.0, 2.0, 0.9)], &[1.0]);
        let pf = traditional_participation(&case, 300.0).unwrap();
        prop_assert_eq!(pf.iter().sum::<f64>(), 1.0);
        prop_assert!(pf.iter().all(|&p| p >= 0.0));
    }
}

struct Fixed(Vec<[f64; XI_DIM]>);

impl Forecaster for Fixed {
    fn forecast(&self, _: &[IntervalStats], horizon: usize) -> Vec<[f64; XI_DIM]> {
        self.0.iter().cycle().take(horizon).copied().collect()
    }
}

#[test]
fn robust_at_zero_is_the_deterministic_dispatch() {
    let grid = reduced();
    let streams = flat_streams(8, 3.0, ClassForecast { load: 520.0, pv: 30.0, wind: 60.0 });
    let cfg = RollingConfig { rolls: Some(1), ..RollingConfig::default() };
    let zero = Fixed(vec![[0.0; XI_DIM]]);
    let robust =
        run_rolling_with(&grid, &streams, None, &RollingConfig { method: Method::Robust, ..cfg.clone() }, &backend(), &zero).unwrap();
    let trad = run_rolling(&grid, &streams, None, &RollingConfig { method: Method::Traditional, ..cfg }, &backend()).unwrap();
    let (a, b) = (robust.records[0].objective.unwrap(), trad.records[0].objective.unwrap());
    assert!((a - b).abs() < 1e-7 * b, "{a} vs {b}");
    assert_eq!(robust.records[0].status, RollStatus::Solved);
}

#[test]
fn robust_flags_unreachable_amplitude() {
    let grid = reduced();
    let streams = flat_streams(8, 3.0, ClassForecast { load: 520.0, pv: 30.0, wind: 60.0 });
    let mut xi = [0.0; XI_DIM];
    xi[3] = 5000.0;
    let cfg = RollingConfig { method: Method::Robust, rolls: Some(2), ..RollingConfig::default() };
    let r = run_rolling_with(&grid, &streams, None, &cfg, &backend(), &Fixed(vec![xi])).unwrap();
    assert!(r.records.iter().all(|rec| rec.status == RollStatus::Relaxed && rec.slack > 0.0));
}

#[test]
fn persistence_on_constant_stream_repeats_decisions() {
    let gens = vec![
        generator("a", 1, 20.0, 200.0, 0.3, &[(20.0, 0.0), (26.0, -600.0)], 2.0),
        generator("b", 1, 10.0, 150.0, 0.5, &[(24.0, 0.0)], 4.0),
        generator("c", 1, 5.0, 100.0, 0.9, &[(28.0, 0.0)], 8.0),
    ];
    let grid = GridModel::new(single_bus(gens, vec![], &[240.0])).unwrap();
    let streams = flat_streams(10, 6.0, ClassForecast { load: 240.0, pv: 0.0, wind: 0.0 });
    let cfg = RollingConfig { method: Method::Robust, horizon: 3, rolls: Some(6), start: 1, ..RollingConfig::default() };
    let r = run_rolling(&grid, &streams, None, &cfg, &backend()).unwrap();
    for rec in &r.records[1..] {
        assert_eq!(rec.decision, r.records[0].decision);
    }
}

#[test]
fn held_roll_keeps_previous_dispatch() {
    let grid = reduced();
    let mut points = vec![ClassForecast { load: 520.0, pv: 30.0, wind: 60.0 }; 9];
    // a load no ramp can reach inside one interval
    points[3].load = 1500.0;
    let streams = Streams {
        agc: AgcSeries::new(vec![1.0; 8 * 75], 4.0, 0.0).unwrap(),
        forecasts: ForecastSeries { timestamps: (0..9).map(|n| n as f64 * 300.0).collect(), points },
    };
    let cfg = RollingConfig { method: Method::Traditional, horizon: 2, rolls: Some(4), ..RollingConfig::default() };
    let r = run_rolling(&grid, &streams, None, &cfg, &backend()).unwrap();
    let held: Vec<usize> = r.records.iter().filter(|x| x.status == RollStatus::Held).map(|x| x.roll).collect();
    assert_eq!(held, vec![2, 3]);
    assert_eq!(r.held_rolls, 2);
    assert_eq!(r.records[2].decision, r.records[1].decision);
    assert!(r.records[2].note.is_some());
}

#[test]
fn realized_soc_is_clamped_and_excursions_are_losses() {
    let case = reduced().case;
    let ng = case.generators.len();
    let mut d = DispatchDecision {
        p_gen: vec![case.generators.iter().map(|g| g.p_min).collect()],
        p_dis: vec![vec![10.0, 20.0]],
        p_chg: vec![vec![0.0, 0.0]],
        pf: vec![vec![0.0; case.frr_count()]],
    };
    d.pf[0][ng] = 1.0;
    let stats = IntervalStats { e_plus: 6000.0, kappa_plus: 1.0, ..Default::default() };
    let prev = d.frr_power(0);
    let r = evaluate_interval(&case, &d, &prev, &[0.15, 0.5], &stats, 300.0, 15.0);
    assert_eq!(r.soc[0], 0.0);
    let j8 = r.losses.iter().find(|l| l.j == 8 && l.resource == ng).unwrap();
    assert!(j8.loss > 0.0);
    assert!((r.penalty - 15.0 * r.losses.iter().map(|l| l.loss.max(0.0)).sum::<f64>()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn realized_soc_bounds(pd in 0.0f64..20.0, pc in 0.0f64..20.0, pf in 0.0f64..1.0, ep in 0.0f64..20000.0, em in 0.0f64..20000.0, k in 0.0f64..1.0, s0 in 0.0f64..1.0) {
        let case = reduced().case;
        let ng = case.generators.len();
        let (pd, pc) = if pd > pc { (pd, 0.0) } else { (0.0, pc) };
        let mut d = DispatchDecision {
            p_gen: vec![case.generators.iter().map(|g| g.p_min).collect()],
            p_dis: vec![vec![pd.min(10.0), pd]],
            p_chg: vec![vec![pc.min(10.0), pc]],
            pf: vec![vec![0.0; case.frr_count()]],
        };
        d.pf[0][ng + 1] = pf;
        let stats = IntervalStats { e_plus: ep, e_minus: em, kappa_plus: k, ..Default::default() };
        let r = evaluate_interval(&case, &d, &d.frr_power(0), &[s0, s0], &stats, 300.0, 15.0);
        for (e, s) in r.soc.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(s));
            let ess = &case.esses[e];
            let j7 = r.losses.iter().find(|l| l.j == 7 && l.resource == ng + e).unwrap().loss;
            let j8 = r.losses.iter().find(|l| l.j == 8 && l.resource == ng + e).unwrap().loss;
            let raw = j7 + ess.soc_max;
            prop_assert!((raw - (ess.soc_min - j8)).abs() < 1e-12);
            prop_assert!((*s - raw.clamp(0.0, 1.0)).abs() < 1e-12);
        }
        prop_assert!(r.penalty >= 0.0);
    }
}

fn short_experiment() -> ExperimentConfig {
    let case = bundled_case("reduced10").unwrap();
    ExperimentConfig {
        synth: SynthConfig::for_case(&case, 0),
        train_intervals: 300,
        validation_rolls: 0,
        test_rolls: 4,
        rolling: RollingConfig { horizon: 3, samples: 20, ..RollingConfig::default() },
    }
}

#[test]
fn dro_run_is_reproducible_and_consistent() {
    let grid = reduced();
    let exp = short_experiment();
    let p = prepare(&exp, 11, rted_dro::par::Exec::Parallel).unwrap();
    let run = || rted_dro::sim::run_test(&grid, &exp, &p, &exp.rolling, &backend()).unwrap();
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.records.len(), 4);
    assert_eq!(a.totals, Totals::of(&a.records));
    let sum: f64 = a.records.iter().map(|r| r.costs.total() + r.penalty).sum();
    assert!((a.totals.total - sum).abs() <= 1e-9 * sum.abs());
    for r in &a.records {
        assert_eq!(r.status, RollStatus::Solved);
        assert!(r.max_violation <= 1e-7, "{}", r.max_violation);
        assert!(r.soc.iter().all(|s| (0.0..=1.0).contains(s)));
        assert!((r.decision.pf[0].iter().sum::<f64>() - 1.0).abs() < 1e-7);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_report_json(&path, std::slice::from_ref(&a)).unwrap();
    assert_eq!(read_report_json(&path).unwrap(), vec![a.clone()]);
    write_summary_csv(&dir.path().join("summary.csv"), std::slice::from_ref(&a)).unwrap();
    write_costs_csv(&dir.path().join("costs.csv"), std::slice::from_ref(&a)).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    assert!(summary.starts_with("method,roll,interval,status,"));
}

#[test]
fn rolling_inputs_are_checked() {
    let grid = reduced();
    let streams = flat_streams(5, 0.0, ClassForecast { load: 500.0, pv: 0.0, wind: 0.0 });
    let bad = |cfg: RollingConfig| run_rolling(&grid, &streams, None, &cfg, &backend()).is_err();
    assert!(bad(RollingConfig { method: Method::Dro, ..RollingConfig::default() }));
    assert!(bad(RollingConfig { method: Method::Traditional, rolls: Some(10), ..RollingConfig::default() }));
    assert!(bad(RollingConfig { method: Method::Traditional, horizon: 0, ..RollingConfig::default() }));
    assert!(bad(RollingConfig { method: Method::Traditional, rho: -1.0, ..RollingConfig::default() }));
    assert!("Robust".parse::<Method>().is_ok() && "mpc".parse::<Method>().is_err());
}

#[test]
fn synthetic_streams_match_the_case() {
    let case: GridCase = bundled_case("reduced10").unwrap();
    let cfg = SynthConfig::for_case(&case, 50);
    assert_eq!(cfg.pv_capacity, 80.0);
    assert_eq!(cfg.wind_capacity, 150.0);
    let s = synthesize_data(&cfg, 2).unwrap();
    assert!(s.forecasts.points.iter().all(|p| p.pv <= 80.0 && p.wind <= 150.0 && p.load > 0.0));
}

/// Out-of-sample cost of the ε = 0 decision on a large held-out set falls as
/// the in-sample set grows.
#[test]
fn more_samples_approach_the_population_optimum() {
    let grid = small_system(2);
    let anchor = common::flat_anchor(&grid);
    let soc0 = [0.5];
    let held_out = sets(4242, 2, 10_000, 0.0);
    let f = Formulation::Dro { rho: 15.0, beta: 0.95, standardize: false, hard: false };
    let ys = [30usize, 60, 90, 120];
    let mut costs = vec![0.0; ys.len()];
    for seed in 0..8u64 {
        for (k, &y) in ys.iter().enumerate() {
            let s: Vec<AmbiguitySet> = (0..2).map(|n| AmbiguitySet::new(xi_samples(seed * 1000 + n, y), 0.0)).collect();
            let inp = RtedInputs { grid: &grid, forecasts: &grid.case.forecasts, anchor: &anchor, soc0: &soc0, sets: &s, t_s: 300.0 };
            let d = solve_rted(&inp, &f, &backend()).unwrap().decision;
            costs[k] += common::saa_objective(&grid, &d, &anchor, &soc0, &held_out, 15.0, 0.95, 300.0);
        }
    }
    let rank_y = average_ranks(&ys.map(|y| y as f64));
    let rank_c = average_ranks(&costs);
    let spearman = pearson(&rank_y, &rank_c).unwrap();
    assert!(spearman <= 0.0, "costs {costs:?}");
}
