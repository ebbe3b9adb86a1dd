use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = nsrm_cli::Cli::parse();
    match nsrm_cli::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
