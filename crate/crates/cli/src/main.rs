use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = udw_cli::Cli::parse();
    match udw_cli::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: a declared tolerance was breached; see the output tables");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
