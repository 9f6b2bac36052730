use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rted_dro::sim::{Method, RollingConfig, SweepParameter};

#[derive(Parser, Debug)]
#[command(name = "rted-dro", version, about = "Data-driven distributionally robust real-time dispatch with regulation reserves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize AGC and forecast streams for a case.
    GenData(GenDataArgs),
    /// Fit marginals and select the copula family by BIC.
    Fit(FitArgs),
    /// Draw interval statistics conditional on a forecast change.
    Sample(SampleArgs),
    /// Solve the first roll of a rolling run and write the solution.
    Solve(SolveArgs),
    /// Run the rolling-horizon simulation for one method.
    Simulate(SolveArgs),
    /// Run the rolling-horizon simulation for all three methods.
    Compare(SolveArgs),
    /// Write the dispatch LP of the first roll in LP text format.
    ExportLp(SolveArgs),
    /// Vary one parameter over seeded synthetic experiments.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::Fit(_) => "fit",
            Command::Sample(_) => "sample",
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::ExportLp(_) => "export-lp",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Dro,
    Robust,
    Traditional,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dro => Method::Dro,
            MethodArg::Robust => Method::Robust,
            MethodArg::Traditional => Method::Traditional,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamArg {
    Rho,
    Samples,
    Eps,
}

impl From<ParamArg> for SweepParameter {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Rho => SweepParameter::Rho,
            ParamArg::Samples => SweepParameter::Samples,
            ParamArg::Eps => SweepParameter::Epsilon,
        }
    }
}

/// Every key a config file may set. Keys are the long flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub case: Option<PathBuf>,
    pub agc: Option<PathBuf>,
    pub forecasts: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub intervals: Option<usize>,
    pub coupling: Option<f64>,
    pub train: Option<usize>,
    pub training: Option<PathBuf>,
    pub d_load: Option<f64>,
    pub d_pv: Option<f64>,
    pub d_wind: Option<f64>,
    pub samples: Option<usize>,
    pub eps: Option<f64>,
    pub rho: Option<f64>,
    pub beta: Option<f64>,
    pub horizon: Option<usize>,
    pub method: Option<MethodArg>,
    pub interval_seconds: Option<f64>,
    pub alpha_ma: Option<f64>,
    pub alpha_rr: Option<f64>,
    pub standardize: Option<bool>,
    pub start: Option<usize>,
    pub rolls: Option<usize>,
    pub param: Option<ParamArg>,
    pub values: Option<Vec<f64>>,
    pub runs: Option<usize>,
    pub validation: Option<usize>,
    pub eps_candidates: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| InputError(format!("config {}: {e}", path.display())).into())
    }
}

/// Marks a failure caused by the caller's input rather than by a solve.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn missing(flag: &str) -> anyhow::Error {
    InputError(format!("--{flag} is required (on the command line or in the config file)")).into()
}

/// Fill unset flags from the config file.
macro_rules! fill {
    ($args:expr, $file:expr, $($field:ident),+ $(,)?) => {
        $( if $args.$field.is_none() { $args.$field = $file.$field.clone(); } )+
    };
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML file whose keys mirror the long flags; flags win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; every random stream is derived from it.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
}

impl Common {
    pub fn file(&self) -> Result<FileConfig> {
        match &self.config {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    pub fn resolve(&mut self, f: &FileConfig) {
        fill!(self, f, out, seed);
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().ok_or_else(|| missing("out"))?;
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub common: Common,
    /// Case file, or the name of a bundled case.
    #[arg(long, value_name = "PATH")]
    pub case: Option<PathBuf>,
    /// Number of dispatch intervals to synthesize.
    #[arg(long, value_name = "N")]
    pub intervals: Option<usize>,
    /// Gain from net-load change to AGC drift (0 makes ξ independent of ΔP).
    #[arg(long, value_name = "K", allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    /// Dispatch interval length in seconds.
    #[arg(long, value_name = "T")]
    pub interval_seconds: Option<f64>,
}

impl GenDataArgs {
    pub fn resolve(&mut self) -> Result<()> {
        let f = self.common.file()?;
        self.common.resolve(&f);
        fill!(self, f, case, intervals, coupling, interval_seconds);
        Ok(())
    }
}

/// Flags shared by every command that computes interval statistics.
#[derive(Args, Debug, Clone, Default)]
pub struct StatArgs {
    /// Dispatch interval length in seconds.
    #[arg(long, value_name = "T")]
    pub interval_seconds: Option<f64>,
    /// Quantile level of the regulation amplitudes.
    #[arg(long, value_name = "A")]
    pub alpha_ma: Option<f64>,
    /// Quantile level of the regulation rates.
    #[arg(long, value_name = "A")]
    pub alpha_rr: Option<f64>,
}

impl StatArgs {
    pub fn resolve(&mut self, f: &FileConfig) {
        fill!(self, f, interval_seconds, alpha_ma, alpha_rr);
    }

    pub fn apply(&self, cfg: &mut RollingConfig) {
        if let Some(t) = self.interval_seconds {
            cfg.t_s = t;
        }
        if let Some(a) = self.alpha_ma {
            cfg.alpha_ma = a;
        }
        if let Some(a) = self.alpha_rr {
            cfg.alpha_rr = a;
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// AGC signal CSV (timestamp, mw).
    #[arg(long, value_name = "PATH")]
    pub agc: Option<PathBuf>,
    /// Forecast CSV (timestamp, load_mw, pv_mw, wind_mw).
    #[arg(long, value_name = "PATH")]
    pub forecasts: Option<PathBuf>,
    /// Number of leading intervals used for training (default: all).
    #[arg(long, value_name = "N")]
    pub train: Option<usize>,
    /// Precomputed training rows (the columns of `training.csv`) instead of streams.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["agc", "forecasts"])]
    pub training: Option<PathBuf>,
    #[command(flatten)]
    pub stat: StatArgs,
}

impl FitArgs {
    pub fn resolve(&mut self) -> Result<()> {
        let f = self.common.file()?;
        self.common.resolve(&f);
        self.stat.resolve(&f);
        fill!(self, f, agc, forecasts, train, training);
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Joint model JSON written by `fit`.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Forecast load change over the interval, MW.
    #[arg(long, value_name = "MW", allow_negative_numbers = true)]
    pub d_load: Option<f64>,
    /// Forecast PV change over the interval, MW.
    #[arg(long, value_name = "MW", allow_negative_numbers = true)]
    pub d_pv: Option<f64>,
    /// Forecast wind change over the interval, MW.
    #[arg(long, value_name = "MW", allow_negative_numbers = true)]
    pub d_wind: Option<f64>,
    /// Number of samples to draw.
    #[arg(long, value_name = "K")]
    pub samples: Option<usize>,
}

impl SampleArgs {
    pub fn resolve(&mut self) -> Result<()> {
        let f = self.common.file()?;
        self.common.resolve(&f);
        fill!(self, f, model, d_load, d_pv, d_wind, samples);
        Ok(())
    }
}

/// Dispatch and rolling-run parameters.
#[derive(Args, Debug, Clone, Default)]
pub struct DispatchArgs {
    /// Case file, or the name of a bundled case.
    #[arg(long, value_name = "PATH")]
    pub case: Option<PathBuf>,
    /// Wasserstein radius.
    #[arg(long, value_name = "R")]
    pub eps: Option<f64>,
    /// Weight of chance-constraint risk and of realized violations.
    #[arg(long, value_name = "R")]
    pub rho: Option<f64>,
    /// CVaR level.
    #[arg(long, value_name = "R")]
    pub beta: Option<f64>,
    /// Conditional samples per look-ahead interval.
    #[arg(long, value_name = "K")]
    pub samples: Option<usize>,
    /// Look-ahead intervals per roll.
    #[arg(long, value_name = "N")]
    pub horizon: Option<usize>,
    #[arg(long, value_enum, value_name = "METHOD")]
    pub method: Option<MethodArg>,
    /// Measure the radius in sample standard deviations.
    #[arg(long, value_name = "BOOL")]
    pub standardize: Option<bool>,
    #[command(flatten)]
    pub stat: StatArgs,
}

impl DispatchArgs {
    pub fn resolve(&mut self, f: &FileConfig) {
        self.stat.resolve(f);
        fill!(self, f, case, eps, rho, beta, samples, horizon, method, standardize);
    }

    pub fn rolling(&self, seed: Option<u64>) -> Result<RollingConfig> {
        let mut c = RollingConfig::default();
        self.stat.apply(&mut c);
        if let Some(v) = self.eps {
            c.epsilon = v;
        }
        if let Some(v) = self.rho {
            c.rho = v;
        }
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(m) = self.method {
            c.method = m.into();
        }
        if let Some(s) = self.standardize {
            c.standardize = s;
        }
        if let Some(s) = seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn case_path(&self) -> PathBuf {
        self.case.clone().unwrap_or_else(|| PathBuf::from("reduced10"))
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub dispatch: DispatchArgs,
    /// AGC signal CSV (timestamp, mw).
    #[arg(long, value_name = "PATH")]
    pub agc: Option<PathBuf>,
    /// Forecast CSV (timestamp, load_mw, pv_mw, wind_mw).
    #[arg(long, value_name = "PATH")]
    pub forecasts: Option<PathBuf>,
    /// Joint model JSON written by `fit` (required for the DRO method).
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// First interval dispatched.
    #[arg(long, value_name = "N")]
    pub start: Option<usize>,
    /// Number of rolls (default: as many as the streams allow).
    #[arg(long, value_name = "N")]
    pub rolls: Option<usize>,
}

impl SolveArgs {
    pub fn resolve(&mut self) -> Result<()> {
        let f = self.common.file()?;
        self.common.resolve(&f);
        self.dispatch.resolve(&f);
        fill!(self, f, agc, forecasts, model, start, rolls);
        Ok(())
    }

    pub fn rolling(&self) -> Result<RollingConfig> {
        let mut c = self.dispatch.rolling(self.common.seed)?;
        c.start = self.start.unwrap_or(0);
        c.rolls = self.rolls;
        Ok(c)
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub dispatch: DispatchArgs,
    /// Parameter to vary.
    #[arg(long, value_enum, value_name = "PARAM")]
    pub param: Option<ParamArg>,
    /// Comma-separated values of the parameter.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Number of seeded synthetic experiments (seeds S, S+1, ...).
    #[arg(long, value_name = "K")]
    pub runs: Option<usize>,
    /// Test rolls per experiment.
    #[arg(long, value_name = "N")]
    pub rolls: Option<usize>,
    /// Training intervals per experiment.
    #[arg(long, value_name = "N")]
    pub train: Option<usize>,
    /// Validation rolls used when selecting the radius.
    #[arg(long, value_name = "N")]
    pub validation: Option<usize>,
    /// Gain from net-load change to AGC drift in the synthetic data.
    #[arg(long, value_name = "K", allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    /// Comma-separated radii; the best on the first run's validation span is used.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub eps_candidates: Option<Vec<f64>>,
}

impl SweepArgs {
    pub fn resolve(&mut self) -> Result<()> {
        let f = self.common.file()?;
        self.common.resolve(&f);
        self.dispatch.resolve(&f);
        fill!(self, f, param, values, runs, rolls, train, validation, coupling, eps_candidates);
        Ok(())
    }
}

pub fn require<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().ok_or_else(|| missing(flag))
}

pub fn check_positive(v: usize, flag: &str) -> Result<usize> {
    if v == 0 {
        bail!(InputError(format!("--{flag} must be positive")));
    }
    Ok(v)
}
