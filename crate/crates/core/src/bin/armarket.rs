//! Experiment runner CLI: `run` executes a JSON-configured experiment,
//! `compare` checks two runs (or a run against an analytic curve) at given
//! tolerances, `analytic` emits steady-state curves directly.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error,
//! 3 comparison-tolerance failure.

use armarket::error::Error;
use armarket::experiment::{
    self, AnalyticSection, CompareTolerances, ExperimentConfig, ExperimentKind, OutputSection,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "armarket", version, about = "AR market model experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-path override, e.g. --set population.count=100
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Compare two runs (or a run against an analytic-curves run).
    Compare {
        /// Run directory or summary.json of the first run.
        run_a: PathBuf,
        /// Run directory or summary.json of the reference run.
        run_b: PathBuf,
        /// KS tolerance; failing it exits with code 3.
        #[arg(long)]
        ks_tol: Option<f64>,
        /// Relative tolerance on the difference of means.
        #[arg(long)]
        mean_tol: Option<f64>,
        /// Samples file of the first run.
        #[arg(long, default_value = "samples.csv")]
        a_samples: String,
        /// Samples file of the reference run.
        #[arg(long, default_value = "samples.csv")]
        b_samples: String,
        /// Write the report JSON here instead of stdout only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the exponential-noise steady-state curve for a given savings.
    Analytic {
        #[arg(long)]
        lambda: f64,
        /// Series truncation order.
        #[arg(long, default_value_t = 12)]
        order: usize,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 601)]
        points: usize,
        /// Output directory for analytic.csv / summary.json / config.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Domain(_) | Error::ScheduleDomain { .. } => 1,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> armarket::Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, out, set } => {
            let cfg = experiment::load_config(&config, seed, out.as_deref(), &set)?;
            let artifacts = experiment::run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&artifacts.summary)?);
            eprintln!("wrote {}", artifacts.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { run_a, run_b, ks_tol, mean_tol, a_samples, b_samples, out } => {
            let tolerances = CompareTolerances { ks: ks_tol, mean_rel: mean_tol };
            let report = experiment::compare(&run_a, &run_b, &a_samples, &b_samples, tolerances)?;
            let text = serde_json::to_string_pretty(&report)?;
            println!("{text}");
            if let Some(path) = out {
                std::fs::write(path, text)?;
            }
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("comparison failed tolerances");
                Ok(ExitCode::from(3))
            }
        }
        Command::Analytic { lambda, order, x_max, points, out } => {
            let cfg = ExperimentConfig {
                experiment: ExperimentKind::AnalyticCurves,
                noise: None,
                population: None,
                kinetic: None,
                sim: None,
                analytic: Some(AnalyticSection {
                    lambda: Some(lambda),
                    order: Some(order),
                    x_max,
                    points: Some(points),
                }),
                output: OutputSection { dir: out },
            };
            let artifacts = experiment::run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&artifacts.summary)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
