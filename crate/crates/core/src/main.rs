use std::process::ExitCode;

use clap::Parser;

use daas_sim::cli;

fn main() -> ExitCode {
    let args = cli::Cli::parse();
    match cli::main_with(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
