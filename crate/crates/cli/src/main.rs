//! `dustcoal`: command-line front end.
//!
//! Exit codes: 0 success, 1 a `verify` check failed, 2 usage error,
//! 3 runtime error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                CliError::Usage(_) => 2,
                CliError::Runtime(_) => 3,
            })
        }
    }
}
