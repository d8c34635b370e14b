use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gwm_delta::job::{run_job_file, Overrides};
use gwm_delta::verify::{verify_suite, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "gwm-delta", version, about = "Run generalized weighted mean difference space jobs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON job file and emit a JSON report.
    Run {
        jobfile: PathBuf,
        /// Probe horizon; overrides job defaults. Without it, job defaults
        /// and then the GWM_HORIZON environment variable apply.
        #[arg(long)]
        horizon: Option<usize>,
        /// Probe tolerance; overrides job defaults.
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for `verify` tasks.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the built-in oracle battery on seeded random inputs.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run {
            jobfile,
            horizon,
            tol,
            seed,
            out,
        } => {
            let overrides = Overrides {
                horizon,
                tol,
                seed,
                ..Overrides::from_env()?
            };
            let report = run_job_file(&jobfile, &overrides)?;
            let text = serde_json::to_string_pretty(&report.to_json())?;
            match out {
                Some(path) => std::fs::write(path, text + "\n")?,
                None => println!("{}", text),
            }
            Ok(report.exit_code() as u8)
        }
        Command::Verify { seed } => {
            let report = verify_suite(seed)?;
            println!("{}", serde_json::to_string_pretty(&report.to_json())?);
            Ok(if report.failed() == 0 { 0 } else { 2 })
        }
    }
}

