//! `neglabel` command-line driver.

mod args;
mod cmd;
mod config;
mod failure;
mod files;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use failure::Failure;

fn report(f: &Failure) -> ExitCode {
    eprintln!("error: {f}");
    eprintln!("error-code: {}", f.name);
    ExitCode::from(f.kind.exit_code() as u8)
}

fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let argv = match config::expand(raw) {
        Ok(a) => a,
        Err(f) => return report(&f),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => {
                    eprintln!("error-code: Usage");
                    ExitCode::from(2)
                }
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report(&Failure::validation(
                "ZeroThreads",
                "--threads must be at least 1",
            ));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return report(&Failure::internal(e.to_string()));
        }
    }
    match cmd::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
