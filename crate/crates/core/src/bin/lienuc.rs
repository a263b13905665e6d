use std::process::ExitCode;

use clap::Parser;
use lienuc::cli::{config_from_cli, exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match config_from_cli(cli).and_then(|c| run(&c)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lienuc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
