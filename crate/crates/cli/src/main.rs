//! `latentpath`: fit, assess, bootstrap and score PLS path models from CSV
//! panels, and run the follow-up regressions.
//!
//! Exit status is 0 on success, 1 for bad input (files, flags, model or spec
//! errors) and 2 for numerical failures such as non-convergence.

mod args;
mod commands;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numeric(m) => m,
        }
    }

    pub fn context(self, path: &Path) -> Self {
        let wrap = |m: String| format!("{}: {m}", path.display());
        match self {
            Failure::Input(m) => Failure::Input(wrap(m)),
            Failure::Numeric(m) => Failure::Numeric(wrap(m)),
        }
    }
}

impl From<latentpath::Error> for Failure {
    fn from(e: latentpath::Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let run = match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Assess(a) => commands::cmd_assess(a),
        Command::Bootstrap(a) => commands::cmd_bootstrap(a),
        Command::Index(a) => commands::cmd_index(a),
        Command::Regress(a) => commands::cmd_regress(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
