use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use relaxkit_cli::{run_experiment, ExperimentConfig, Flags};

fn main() -> ExitCode {
    let flags = Flags::parse();
    let result = ExperimentConfig::from_flags(flags).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(summary) => {
            let mut out = std::io::stdout().lock();
            // A closed stdout (e.g. piped into `head`) is not an experiment failure.
            for line in &summary.lines {
                let _ = writeln!(out, "{line}");
            }
            for file in &summary.files {
                let _ = writeln!(out, "wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
