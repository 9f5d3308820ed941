use std::process::ExitCode;

use clap::Parser;
use lorarep_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match lorarep_cli::run(cli) {
        Ok((outcome, written)) => {
            print!("{}", outcome.stdout);
            for p in written {
                println!("wrote {}", p.display());
            }
            if outcome.exit_code != 0 {
                if let Some(f) = outcome.stdout.lines().rev().find(|l| l.starts_with("first failing")) {
                    eprintln!("{f}");
                }
                return ExitCode::from(outcome.exit_code as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
