use std::path::Path;

use anyhow::{Context, Result};
use log::info;
use serde::Serialize;
use serde_json::json;

use rted_dro::copula::{fit_joint, read_training_csv, write_training_csv, FittedJointModel};
use rted_dro::dro::{build_rted, solve_rted_checked, RtedSolution};
use rted_dro::grid::{load_case, GridModel};
use rted_dro::lp::{write_lp_text, HighsBackend, LpError};
use rted_dro::par::Exec;
use rted_dro::signal_stats::{read_agc_csv, read_forecast_csv, write_agc_csv, write_forecast_csv, write_stats_csv, PowerVariation};
use rted_dro::sim::{
    compare_methods, first_roll, prepare, run_rolling, select_epsilon, sweep, synthesize_data, training_rows, write_costs_csv,
    write_report_json, write_sensitivity_csv, write_summary_csv, EvaluationReport, ExperimentConfig, Method, RollSetup, RollingConfig,
    Streams, SynthConfig,
};
use rted_dro::Error;

use crate::manifest::Recorder;
use crate::options::{check_positive, require, FitArgs, GenDataArgs, InputError, SampleArgs, SolveArgs, SweepArgs};

/// A solve that ended infeasible after its status was written.
#[derive(Debug)]
pub struct Infeasible;

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("dispatch problem is infeasible")
    }
}

impl std::error::Error for Infeasible {}

fn read_streams(rec: &mut Recorder, agc: &Path, forecasts: &Path) -> Result<Streams> {
    rec.input(agc)?;
    rec.input(forecasts)?;
    Ok(Streams { agc: read_agc_csv(agc)?, forecasts: read_forecast_csv(forecasts)? })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn gen_data(mut a: GenDataArgs) -> Result<()> {
    a.resolve()?;
    let out = a.common.out_dir()?;
    let mut rec = Recorder::new("gen-data", &out);
    let case_path = a.case.clone().unwrap_or_else(|| "reduced10".into());
    rec.input(&case_path)?;
    let case = load_case(&case_path)?;
    let exp = ExperimentConfig::default();
    let mut synth = SynthConfig::for_case(&case, check_positive(a.intervals.unwrap_or(exp.total_intervals()), "intervals")?);
    if let Some(k) = a.coupling {
        synth.coupling = k;
    }
    if let Some(t) = a.interval_seconds {
        synth.t_s = t;
    }
    let seed = a.common.seed.unwrap_or(0);
    rec.seed(seed);
    rec.config(json!({ "case": case_path, "synth": &synth }))?;
    let streams = synthesize_data(&synth, seed)?;
    write_agc_csv(&rec.artifact("agc.csv"), &streams.agc)?;
    write_forecast_csv(&rec.artifact("forecasts.csv"), &streams.forecasts)?;
    info!("{} intervals, {} AGC periods", streams.intervals(), streams.agc.values.len());
    rec.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct BicRow<'a> {
    family: &'a str,
    log_likelihood: f64,
    param_count: usize,
    sample_count: usize,
    bic: f64,
    selected: bool,
}

pub fn fit(mut a: FitArgs) -> Result<()> {
    a.resolve()?;
    let out = a.common.out_dir()?;
    let mut rec = Recorder::new("fit", &out);
    let rows = match &a.training {
        Some(path) => {
            rec.input(path)?;
            let mut rows = read_training_csv(path)?;
            rows.truncate(a.train.unwrap_or(rows.len()));
            rec.config(json!({ "train": rows.len() }))?;
            rows
        }
        None => {
            let streams = read_streams(&mut rec, &require(&a.agc, "agc")?, &require(&a.forecasts, "forecasts")?)?;
            let mut cfg = RollingConfig::default();
            a.stat.apply(&mut cfg);
            let stat = cfg.stat_config(streams.agc.tau);
            let train = a.train.unwrap_or(streams.intervals());
            rec.config(json!({ "train": train, "stat": &stat }))?;
            training_rows(&streams, &stat, 0..train)?
        }
    };
    let model = fit_joint(&rows, Exec::Parallel)?;
    model.save(&rec.artifact("model.json"))?;

    let path = rec.artifact("bic.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for c in &model.candidates {
        let r = &c.report;
        w.serialize(BicRow {
            family: c.spec.family.name(),
            log_likelihood: r.log_likelihood,
            param_count: r.param_count,
            sample_count: r.sample_count,
            bic: r.bic,
            selected: c.spec.family == model.family(),
        })?;
    }
    w.flush()?;
    write_training_csv(&rec.artifact("training.csv"), &rows)?;
    println!("selected {} (BIC {:.3}) from {} rows", model.family().name(), model.report.bic, rows.len());
    rec.finish()?;
    Ok(())
}

pub fn sample(mut a: SampleArgs) -> Result<()> {
    a.resolve()?;
    let out = a.common.out_dir()?;
    let mut rec = Recorder::new("sample", &out);
    let model_path = require(&a.model, "model")?;
    rec.input(&model_path)?;
    let model = FittedJointModel::load(&model_path)?;
    let dp = PowerVariation::from_array([require(&a.d_load, "d-load")?, require(&a.d_pv, "d-pv")?, require(&a.d_wind, "d-wind")?]);
    let count = check_positive(a.samples.unwrap_or(1000), "samples")?;
    let seed = a.common.seed.unwrap_or(0);
    rec.seed(seed);
    rec.config(json!({ "condition": dp, "samples": count }))?;
    let draws = model.conditional_sample(&dp, count, seed)?;
    write_stats_csv(&rec.artifact("samples.csv"), &draws)?;
    rec.finish()?;
    Ok(())
}

/// Everything a dispatch command needs after flag resolution.
struct DispatchRun {
    rec: Recorder,
    grid: GridModel,
    streams: Streams,
    model: Option<FittedJointModel>,
    cfg: RollingConfig,
}

fn dispatch_run(command: &str, a: &mut SolveArgs, needs_model: bool) -> Result<DispatchRun> {
    a.resolve()?;
    let out = a.common.out_dir()?;
    let mut rec = Recorder::new(command, &out);
    let case_path = a.dispatch.case_path();
    rec.input(&case_path)?;
    let grid = GridModel::new(load_case(&case_path)?)?;
    let streams = read_streams(&mut rec, &require(&a.agc, "agc")?, &require(&a.forecasts, "forecasts")?)?;
    let cfg = a.rolling()?;
    let model = match &a.model {
        Some(p) => {
            rec.input(p)?;
            Some(FittedJointModel::load(p)?)
        }
        None if needs_model || cfg.method == Method::Dro => {
            return Err(InputError("the DRO method needs --model (a joint model written by `fit`)".into()).into())
        }
        None => None,
    };
    rec.seed(cfg.seed);
    rec.config(json!({ "case": case_path, "rolling": &cfg }))?;
    Ok(DispatchRun { rec, grid, streams, model, cfg })
}

fn setup(r: &DispatchRun) -> Result<RollSetup> {
    Ok(first_roll(&r.grid, &r.streams, r.model.as_ref(), &r.cfg, &HighsBackend::default())?)
}

#[derive(Serialize)]
struct SolveReport<'a> {
    status: &'a str,
    method: Method,
    interval: usize,
    message: Option<String>,
    max_violation: Option<f64>,
    solution: Option<RtedSolution>,
}

pub fn solve(mut a: SolveArgs) -> Result<()> {
    let mut r = dispatch_run("solve", &mut a, false)?;
    let path = r.rec.artifact("solution.json");
    let mut report =
        SolveReport { status: "", method: r.cfg.method, interval: r.cfg.start, message: None, max_violation: None, solution: None };
    let outcome = setup(&r).and_then(|s| {
        report.interval = s.interval;
        Ok(solve_rted_checked(&s.inputs(&r.grid, r.cfg.t_s), &s.formulation, &HighsBackend::default())?)
    });
    match outcome {
        Ok((sol, viol)) => {
            report.status = if sol.slack > 0.0 { "relaxed" } else { "optimal" };
            println!("{}: objective {:.6}", report.status, sol.objective);
            report.max_violation = Some(viol);
            report.solution = Some(sol);
        }
        Err(e) if matches!(e.downcast_ref::<Error>(), Some(Error::Lp(LpError::Infeasible))) => {
            report.status = "infeasible";
            report.message = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    write_json(&path, &report)?;
    let infeasible = report.status == "infeasible";
    r.rec.finish()?;
    if infeasible {
        return Err(Infeasible.into());
    }
    Ok(())
}

pub fn export_lp(mut a: SolveArgs) -> Result<()> {
    let mut r = dispatch_run("export-lp", &mut a, false)?;
    let s = setup(&r)?;
    let problem = build_rted(&s.inputs(&r.grid, r.cfg.t_s), &s.formulation)?;
    let path = r.rec.artifact("model.lp");
    std::fs::write(&path, write_lp_text(&problem.model)).with_context(|| format!("writing {}", path.display()))?;
    println!("{} variables, {} rows", problem.model.num_vars(), problem.model.num_rows());
    r.rec.finish()?;
    Ok(())
}

fn write_reports(rec: &mut Recorder, reports: &[EvaluationReport]) -> Result<()> {
    write_report_json(&rec.artifact("report.json"), reports)?;
    write_summary_csv(&rec.artifact("summary.csv"), reports)?;
    write_costs_csv(&rec.artifact("costs.csv"), reports)?;
    for rep in reports {
        let t = &rep.totals;
        println!(
            "{:<12} total {:>12.2}  generation {:>12.2}  degradation {:>10.2}  mileage {:>10.2}  penalty {:>10.2}  held {}",
            rep.method.name(),
            t.total,
            t.generation,
            t.degradation,
            t.mileage,
            t.penalty,
            rep.held_rolls
        );
    }
    Ok(())
}

pub fn simulate(mut a: SolveArgs) -> Result<()> {
    let mut r = dispatch_run("simulate", &mut a, false)?;
    let report = run_rolling(&r.grid, &r.streams, r.model.as_ref(), &r.cfg, &HighsBackend::default())?;
    write_reports(&mut r.rec, &[report])?;
    r.rec.finish()?;
    Ok(())
}

pub fn compare(mut a: SolveArgs) -> Result<()> {
    let mut r = dispatch_run("compare", &mut a, true)?;
    let reports = compare_methods(&r.grid, &r.streams, r.model.as_ref(), &r.cfg, &HighsBackend::default())?;
    write_reports(&mut r.rec, &reports)?;
    r.rec.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct RunRow {
    parameter: String,
    value: f64,
    seed: u64,
    generation: f64,
    degradation: f64,
    mileage: f64,
    penalty: f64,
    total: f64,
}

pub fn run_sweep(mut a: SweepArgs) -> Result<()> {
    a.resolve()?;
    let out = a.common.out_dir()?;
    let mut rec = Recorder::new("sweep", &out);
    let case_path = a.dispatch.case_path();
    rec.input(&case_path)?;
    let grid = GridModel::new(load_case(&case_path)?)?;
    let parameter = require(&a.param, "param")?.into();
    let values = require(&a.values, "values")?;
    if values.is_empty() {
        return Err(InputError("--values needs at least one value".into()).into());
    }
    let base = a.common.seed.unwrap_or(0);
    let runs = check_positive(a.runs.unwrap_or(10), "runs")?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| base + i).collect();
    let defaults = ExperimentConfig::default();
    let rolling = a.dispatch.rolling(None)?;
    let mut synth = SynthConfig::for_case(&grid.case, 0);
    if let Some(k) = a.coupling {
        synth.coupling = k;
    }
    let mut exp = ExperimentConfig {
        synth,
        train_intervals: a.train.unwrap_or(defaults.train_intervals),
        validation_rolls: a.validation.unwrap_or(defaults.validation_rolls),
        test_rolls: check_positive(a.rolls.unwrap_or(defaults.test_rolls), "rolls")?,
        rolling,
    };
    let backend = HighsBackend::default();
    rec.seed(base);

    if let Some(cands) = &a.eps_candidates {
        let p = prepare(&exp, seeds[0], Exec::Parallel)?;
        let (best, scores) = select_epsilon(&grid, &exp, &p, cands, &backend)?;
        let mut w = csv::Writer::from_path(rec.artifact("cv.csv"))?;
        w.write_record(["eps", "validation_total"])?;
        for (e, t) in &scores {
            w.write_record([e.to_string(), t.to_string()])?;
        }
        w.flush()?;
        println!("selected eps {best}");
        exp.rolling.epsilon = best;
    }
    rec.config(json!({ "case": case_path, "parameter": parameter, "values": &values, "seeds": &seeds, "experiment": &exp }))?;

    let result = sweep(&grid, &exp, parameter, &values, &seeds, &backend)?;
    write_sensitivity_csv(&rec.artifact("sensitivity.csv"), &result.rows)?;
    let mut w = csv::Writer::from_path(rec.artifact("runs.csv"))?;
    for (v, per_seed) in values.iter().zip(&result.per_seed) {
        for (seed, t) in seeds.iter().zip(per_seed) {
            w.serialize(RunRow {
                parameter: parameter.to_string(),
                value: *v,
                seed: *seed,
                generation: t.generation,
                degradation: t.degradation,
                mileage: t.mileage,
                penalty: t.penalty,
                total: t.total,
            })?;
        }
    }
    w.flush()?;
    for row in &result.rows {
        println!(
            "{}={:<8} total {:>12.2}  mileage {:>10.2}  penalty {:>10.2}",
            row.parameter, row.value, row.total, row.mileage, row.penalty
        );
    }
    rec.finish()?;
    Ok(())
}
