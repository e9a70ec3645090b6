use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = driftlab::cli::Cli::parse();
    match driftlab::cli::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
