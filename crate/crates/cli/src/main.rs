use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = kdv_actions_cli::Cli::parse();
    ExitCode::from(kdv_actions_cli::run(&cli))
}
