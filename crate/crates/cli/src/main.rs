use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod error;
mod output;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
