#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: cannot start worker threads: {e}");
        return ExitCode::from(3);
    }
    let outcome = match &cli.command {
        Command::PriceSingle(a) => commands::price_single(a),
        Command::PriceBasket(a) => commands::price_basket(a),
        Command::CalibrateDiffusive(a) => commands::calibrate_diffusive(a),
        Command::CalibrateTuple(a) => commands::calibrate_tuple(a),
        Command::ReportCorrelation(a) => commands::report_correlation(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::NotConverged(_) => 4,
        }
    }
}
