//! Synthetic data, the rolling-horizon experiment and its reports.

mod experiment;
mod report;
mod rolling;
mod synth;

pub use experiment::{
    compare_methods, prepare, run_test, select_epsilon, sweep, training_rows, ExperimentConfig, Prepared, SensitivityRow, SweepParameter,
    SweepResult,
};
pub use report::{read_report_json, write_costs_csv, write_report_json, write_sensitivity_csv, write_summary_csv};
pub use rolling::{
    evaluate_interval, first_roll, max_rolls, run_rolling, run_rolling_with, traditional_participation, EvaluationReport, Forecaster,
    LossRecord, Method, Persistence, RealizedInterval, RollRecord, RollSetup, RollStatus, RollingConfig, Totals,
};
pub use synth::{synthesize_data, Streams, SynthConfig};
