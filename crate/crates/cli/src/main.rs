use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perfopt::environment::EnvKind;
use perfopt_harness::analyze::{analyze_and_write, REPORT_FILE};
use perfopt_harness::oracle::{write_landscape, DEFAULT_RESOLUTION};
use perfopt_harness::persist::write_atomic;
use perfopt_harness::runner::{run_experiment, workers_from_env, write_experiment, WORKERS_ENV};
use perfopt_harness::{ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "perfopt", version, about = "Performative risk minimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair of an experiment config.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Parallel runs; defaults to $PERFOPT_WORKERS or the CPU count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write a theory report for a finished run directory.
    Analyze { dir: PathBuf },
    /// Dump the PR landscape of an environment on a dense grid.
    Oracle {
        env: String,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, output, workers } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(dir) = output {
                config.output = dir;
            }
            let workers = workers.unwrap_or_else(workers_from_env);
            let experiment = run_experiment(&config, workers)?;
            write_experiment(&experiment, &config.output)?;
            for stats in &experiment.aggregate.algorithms {
                println!(
                    "{:<10} cum_regret {:>12.4} ± {:<10.4} simple_regret {:>10.4e}  wall {:.4}s",
                    stats.algorithm.name(),
                    stats.cumulative_regret_mean,
                    stats.cumulative_regret_std,
                    stats.simple_regret_mean,
                    stats.wall_clock_mean
                );
            }
            println!("wrote {} ({WORKERS_ENV}={workers})", config.output.display());
        }
        Command::Analyze { dir } => {
            let report = analyze_and_write(&dir)?;
            println!(
                "d = {:.4}, epsilon = {:.4}, equal budget: {}; wrote {}",
                report.near_optimality.d,
                report.sensitivity.epsilon,
                report.equal_budget,
                dir.join(REPORT_FILE).display()
            );
        }
        Command::Oracle { env, resolution, output } => {
            let kind: EnvKind = env.parse().map_err(|e: perfopt::Error| HarnessError::Config(e.to_string()))?;
            match output {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_landscape(kind, resolution, &mut buf)?;
                    write_atomic(&path, &buf)?;
                }
                None => write_landscape(kind, resolution, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
