//! `sepcoef`: estimation, permutation testing, variable selection,
//! simulation and closed-form oracles for Λ(Y|X).

mod args;
mod commands;
mod config;
mod error;
mod input;
mod output;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Permtest(a) => commands::permtest(a),
        Command::Select(a) => commands::select(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
