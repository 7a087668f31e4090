use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use satcurve::cli::{cmd_estimate, cmd_run, cmd_simulate, CliError};

/// Transformer core saturation-curve identification.
#[derive(Debug, Parser)]
#[command(name = "satcurve", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the configured transformer and write a `t,v1,i1,v2,i2` CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Identify the saturation curve from a waveform CSV.
    Estimate {
        #[arg(long)]
        waveform: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate, estimate and compare against the simulated curve.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Maximum qualified-bin error in per-unit flux (`inf` to disable).
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SATCURVE_LOG", "warn")).init();
    let args = Args::parse();

    match args.command {
        Command::Simulate { config, out } => match cmd_simulate(&config, &out) {
            Ok(record) => {
                println!("wrote {} samples to {}", record.len(), out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Estimate {
            waveform,
            config,
            out,
        } => match cmd_estimate(&waveform, &config, &out) {
            Ok(summary) => {
                println!("{summary}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run {
            config,
            report,
            threshold,
        } => match cmd_run(&config, &report, threshold) {
            Ok(outcome) => {
                println!("{}", outcome.report);
                println!("threshold           : {} pu", outcome.threshold);
                println!("summary written to {}", outcome.summary_path.display());
                if outcome.passed {
                    println!("result              : PASS");
                    ExitCode::SUCCESS
                } else {
                    println!("result              : FAIL");
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
    }
}
