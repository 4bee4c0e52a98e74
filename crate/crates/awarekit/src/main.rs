use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    awarekit::cli::init_logging();
    let cli = awarekit::cli::Cli::parse();
    match awarekit::cli::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
