//! `tecu run <config>` / `tecu validate <config>` / `tecu enhance <in> <out>`
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tecu::bench::{
    enhance_image, load_config, resolve_output_dir, run_experiment_in, validate_experiment, EnhanceSolver,
    OUTPUT_DIR_ENV, SUMMARY_FILE,
};
use tecu::engine::RunOptions;
use tecu::tasks::{read_image_pnm, write_image_pnm};
use tecu::TecuError;

#[derive(Parser)]
#[command(name = "tecu", version, about = "Two-block coordinate update solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, seed) pair of an experiment config.
    #[command(after_help = format!("The output directory can be overridden with {OUTPUT_DIR_ENV}."))]
    Run { config: PathBuf },
    /// Parse a config and run oracle checks on its problem instances.
    Validate {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        probes: usize,
    },
    /// Low-light enhancement of a PGM/PPM image.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        /// tecu or palm
        #[arg(long, default_value = "tecu")]
        solver: String,
        #[arg(long, default_value_t = 300)]
        max_outer: usize,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<TecuError> for Failure {
    fn from(e: TecuError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn config_failure(e: TecuError) -> Failure {
    Failure::Config(e.to_string())
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config } => {
            let cfg = load_config(&config).map_err(config_failure)?;
            let dir = resolve_output_dir(&cfg);
            let summaries = run_experiment_in(&cfg, &dir)?;
            for s in &summaries {
                println!(
                    "{:<16} seed {:<4} {:<6} iters {:>5} inner {:>6} converged {:<5} psi {:.6e} violations {}",
                    s.solver,
                    s.seed,
                    s.combination,
                    s.outer_iterations,
                    s.total_inner_steps,
                    s.converged,
                    s.final_objective,
                    s.descent_violation_count
                );
            }
            println!("wrote {} traces and {}", summaries.len(), dir.join(SUMMARY_FILE).display());
            Ok(())
        }
        Command::Validate { config, probes } => {
            let cfg = load_config(&config).map_err(config_failure)?;
            let reports = validate_experiment(&cfg, probes)?;
            let mut failed = 0;
            for (seed, report) in &reports {
                let fails: Vec<_> = report.failures().collect();
                println!("seed {seed}: {} checks, {} failed", report.checks.len(), fails.len());
                for c in &fails {
                    println!("  FAIL {} probe {}: {:.3e} > {:.1e}", c.name, c.probe, c.value, c.tolerance);
                }
                failed += fails.len();
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} oracle checks failed")));
            }
            println!("ok");
            Ok(())
        }
        Command::Enhance {
            input,
            output,
            alpha,
            solver,
            max_outer,
        } => {
            let solver: EnhanceSolver = solver.parse().map_err(config_failure)?;
            if !(alpha >= 0.0) {
                return Err(Failure::Config(format!("alpha must be non-negative, got {alpha}")));
            }
            let img = read_image_pnm(&input)?;
            let opts = RunOptions {
                max_outer,
                ..RunOptions::default()
            };
            let out = enhance_image(&img, alpha, solver, &opts)?;
            write_image_pnm(&output, &out.image)?;
            println!(
                "{} iterations ({}), converged {}, wrote {}",
                out.result.iterations(),
                out.result.combination_label,
                out.result.converged(),
                output.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
