//! `cuspgrowth`: growth tables, exponent fits, parabolic series and
//! boundary audits for a group spec file.

mod config;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::{Args, RunConfig};

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run::execute(&config) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if let Err(e) = output::write(&config.out, &outcome.body) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            if outcome.inconclusive {
                eprintln!("audit inconclusive");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
