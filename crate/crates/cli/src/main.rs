mod args;
mod commands;
mod format;
mod manifest;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;

use crate::args::{Cli, Command};

/// Invalid arguments, configuration or input data.
const EXIT_USAGE: u8 = 2;
/// Fitting, correlation structure or per-draw evaluation failed.
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        e.downcast_ref::<copula_ci::Error>()
            .is_some_and(copula_ci::Error::is_numerical)
            || e.is::<copula_ci::CorrelationError>()
    });
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn run(cli: &Cli) -> Result<String> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match &cli.command {
        Command::Combine(a) => commands::combine(a),
        Command::AdjustPrev(a) => commands::adjust_prev(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Scatter(a) => commands::scatter(a),
        Command::Coverage(a) => commands::coverage(a),
        Command::Replay(a) => commands::replay(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: writing output: {e}");
                    ExitCode::from(EXIT_USAGE)
                }
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
