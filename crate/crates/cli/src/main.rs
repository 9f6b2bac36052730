mod commands;
mod manifest;
mod options;

use std::process::ExitCode;

use clap::Parser;
use rted_dro::lp::LpError;
use rted_dro::Error;

use commands::Infeasible;
use options::{Cli, Command, InputError};

const EXIT_OTHER: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Infeasible>() {
            return EXIT_INFEASIBLE;
        }
        if cause.is::<InputError>() {
            return EXIT_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Lp(LpError::Infeasible) => EXIT_INFEASIBLE,
                Error::Lp(_) => EXIT_SOLVE,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_OTHER
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Fit(a) => commands::fit(a),
        Command::Sample(a) => commands::sample(a),
        Command::Solve(a) => commands::solve(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Compare(a) => commands::compare(a),
        Command::ExportLp(a) => commands::export_lp(a),
        Command::Sweep(a) => commands::run_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({name}): {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
