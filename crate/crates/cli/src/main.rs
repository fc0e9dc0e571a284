use std::process::ExitCode;

use balpha_cli::{classify, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            ExitCode::from(summary.status)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
