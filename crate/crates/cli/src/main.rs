//! `geomech`: command-line front end for influential-agent selection.
//!
//! Exit codes: 0 pass, 1 property violation, 2 input error, 3 config error.

mod args;
mod commands;
mod render;
mod source;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid graph input, or out-of-range parameters.
    Input(String),
    /// Unknown names, conflicting or malformed flags.
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violation,
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    match &cli.command {
        Command::Select(a) => commands::select(a),
        Command::Verify(a) => commands::verify(a),
        Command::Eval(a) => commands::eval(a),
        Command::Bound(a) => commands::bound(a),
        Command::Generate(a) => commands::generate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(&cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
