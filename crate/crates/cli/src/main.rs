//! `hotskit` command-line front end. Exit codes: 0 when the solve
//! converged, 2 when it stopped without converging (diverged, oscillating or
//! out of iterations), 1 on bad input.

mod args;
mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;
use hotskit::SolveStatus;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot configure {k} threads: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = match &cli.command {
        Command::Rank(a) => commands::rank(a),
        Command::Rate(a) => commands::rate(a),
        Command::Flow(a) => commands::flow(a),
        Command::Synth(a) => commands::synth(a),
    };
    match outcome {
        Ok(o) => {
            println!("{}", o.report.line());
            match o.status {
                SolveStatus::Converged => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            }
        }
        Err(e) => {
            println!("status=Error");
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
