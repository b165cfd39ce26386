mod args;
mod commands;
mod output;
mod reproduce;

use std::process::ExitCode;

use clap::Parser;
use vodcache::Error;

use args::{Cli, Command};

/// Outcome of a command that ran to completion.
pub enum Status {
    Done,
    /// Outputs were written but an iterative solver hit its cap.
    NotConverged,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Convergence { .. } => 3,
        Error::Io(_) | Error::Parse { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Curve(a) => commands::curve(&a),
        Command::Place(a) => commands::place(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Reproduce(a) => reproduce::run(&a),
    };
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => {
            eprintln!("warning: solver stopped before meeting its tolerances; results are flagged");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
