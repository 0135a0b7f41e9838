use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = relcon::Cli::parse();
    match relcon::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relcon: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
