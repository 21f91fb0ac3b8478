//! `triage` — phishing triage pipeline CLI.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 stage failure.

mod commands;
mod live;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{Cli, CliError};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Data(msg)) => {
            eprintln!("data error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Stage(msg)) => {
            eprintln!("stage failure: {msg}");
            std::process::exit(3);
        }
    }
}
