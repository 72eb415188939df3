//! Batch command-line front-end: dataset synthesis, feature extraction,
//! filter learning, and experiment evaluation.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.
//! Every command that draws random numbers takes a mandatory `--seed` and is
//! byte-deterministic for a fixed seed, independent of the worker thread
//! count (`RAYON_NUM_THREADS`).

mod commands;

use clap::error::ErrorKind;
use clap::Parser;
use commands::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    std::process::exit(commands::run(cli));
}
