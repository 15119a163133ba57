//! `spkbwe`: batch front end for telephone-band simulation, bandwidth
//! extension and speaker identification sweeps.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Logs go to
//! stderr (`RUST_LOG` or `-v` to raise the level); data only goes to files.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{BweCommand, Cli, Command};
use commands::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and --version are "errors" that print to stdout and exit 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    let outcome = match cli.command {
        Command::Filter(a) => commands::filter(&a),
        Command::Bwe {
            command: BweCommand::Train(a),
        } => commands::bwe_train(&a),
        Command::Bwe {
            command: BweCommand::Extend(a),
        } => commands::bwe_extend(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::SynthCorpus(a) => commands::synth_corpus(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
}
