use std::process::ExitCode;

use bcddr_bench::{resolve, run_experiment, BenchError, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, provenance) = match resolve(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg, &provenance) {
        Ok(outcome) => {
            for w in &outcome.aggregate.warnings {
                eprintln!("warning: {w}");
            }
            match std::fs::read_to_string(cfg.out.join("summary.txt")) {
                Ok(s) => print!("{s}"),
                Err(e) => eprintln!("warning: {}", BenchError::io(cfg.out.join("summary.txt"), e)),
            }
            println!("results in {}", cfg.out.display());
            if outcome.failures() > 0 {
                eprintln!("{} run(s) failed", outcome.failures());
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
