//! `bdcluster` binary: exit 0 on success, 1 on a verification violation and
//! 2 on invalid input.

use std::process::ExitCode;

use bdcluster_cli::{run, Cli, EXIT_INVALID};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            if cli.config.out.is_none() {
                print!("{}", outcome.output);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID as u8)
        }
    }
}
