//! Thin CLI over the `ltv_commute` library: load an experiment config,
//! run every experiment, and write traces plus a JSON report.
//!
//! Exit codes reflect tool health, not mathematical verdicts: 0 when every
//! experiment executed (commutative or not), 1 on config errors, 2 on
//! runtime failures such as unwritable output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ltv_commute::runner::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ltv-commute", version, about = "Commutativity experiments on LTV systems and their feedback conjugates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config and write traces and a report.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for traces, plots, and report.json.
        #[arg(long)]
        out: PathBuf,
        /// Override the solver step size.
        #[arg(long)]
        step: Option<f64>,
        /// Override every system's time domain.
        #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
        domain: Option<Vec<f64>>,
    },
    /// Load and validate a config without running anything.
    Validate {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    runner::load_config(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            step,
            domain,
        } => {
            let mut cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            if let Some(step) = step {
                cfg = match cfg.with_step(step) {
                    Ok(cfg) => cfg,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                };
            }
            if let Some(domain) = domain {
                cfg = match cfg.with_domain(domain[0], domain[1]) {
                    Ok(cfg) => cfg,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                };
            }
            match runner::run(&cfg, &out) {
                Ok(report) => {
                    for record in &report.experiments {
                        let status = if record.ok {
                            record.decision.clone().unwrap_or_else(|| "ok".to_string())
                        } else {
                            format!("error: {}", record.error.as_deref().unwrap_or("unknown"))
                        };
                        println!("{} ({}): {}", record.id, record.kind, status);
                    }
                    println!("report: {}", out.join("report.json").display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!(
                    "config ok: {} systems, {} gain pairs, {} signals, {} experiments",
                    cfg.systems.len(),
                    cfg.gains.len(),
                    cfg.signals.len(),
                    cfg.experiments.len()
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
