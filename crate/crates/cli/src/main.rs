//! `lecseg`: command-line front end for the lecture segmentation pipeline.

mod cli;
mod commands;
mod config;
mod corpus;
mod exit;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = match cli::Cli::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation failures; help and version are not errors
            return if e.use_stderr() {
                ExitCode::from(exit::VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if args.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
