//! Experiment runner: builds task instances from a config, runs every
//! (solver, seed) pair, and writes traces and a summary.

mod config;
mod enhance;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{
    build_rule, load_config, parse_config, DlSection, ExperimentConfig, ExperimentSection, LieSection, RuleSpec,
    SolverKind, SolverSpec, TaskKind,
};
pub use enhance::{enhance_image, EnhanceSolver, Enhancement, DISPLAY_GAMMA};
pub use output::{
    emit_summary_json, emit_trace_csv, numeric_columns, parse_trace_csv, trace_csv, RunSummary, TraceRow, TRACE_HEADER,
};

use crate::baselines::{run_baseline, run_inv, Baseline};
use crate::engine::{solve, RunOptions, SolveResult, SolverConfig};
use crate::error::{Result, TecuError};
use crate::problem::{validate_problem, Block, BlockProblem, Mat, ValidationReport};
use crate::tasks::{
    build_dl_problem, build_lie_problem, read_image_pnm, seeded_rng, synth_dl_data, synth_retinex, DlInstance,
    DlProblem, LieInstance, LieProblem,
};

/// Environment variable overriding `experiment.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "TECU_OUTPUT_DIR";

/// Summary file written next to the traces.
pub const SUMMARY_FILE: &str = "summary.json";

/// Offset separating the initialization stream from the data stream of a seed.
const INIT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// A built problem instance.
#[derive(Debug, Clone)]
pub enum Task {
    Dl(DlProblem),
    Lie(LieProblem),
}

impl Task {
    pub fn problem(&self) -> &dyn BlockProblem {
        match self {
            Task::Dl(p) => p,
            Task::Lie(p) => p,
        }
    }

    /// Deterministic starting point for `seed`.
    pub fn initial_point(&self, seed: u64) -> (Mat, Mat) {
        match self {
            Task::Dl(p) => p.initial_point(&mut seeded_rng(seed.wrapping_add(INIT_STREAM))),
            Task::Lie(p) => p.initial_point(),
        }
    }
}

/// Builds the task instance for one seed.
pub fn build_task(config: &ExperimentConfig, seed: u64) -> Result<Task> {
    match config.experiment.task {
        TaskKind::L0dl => {
            let dl = config.dl();
            let data = synth_dl_data(&dl.synth_spec(seed))?;
            Ok(Task::Dl(build_dl_problem(DlInstance::new(data.y, dl.lambda, dl.m))?))
        }
        TaskKind::Lie => {
            let lie = config.lie();
            let observed = match &lie.image {
                Some(path) => read_image_pnm(path)?.max_channel(),
                None => synth_retinex(lie.size, seed).observed,
            };
            Ok(Task::Lie(build_lie_problem(LieInstance::new(observed, lie.alpha))?))
        }
    }
}

/// Runs one solver spec on a built task.
pub fn run_solver(task: &Task, spec: &SolverSpec, opts: &RunOptions, seed: u64) -> Result<SolveResult> {
    let (x0, y0) = task.initial_point(seed);
    match spec.baseline() {
        None => {
            let (rx, ry) = match (&spec.x, &spec.y) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err(TecuError::Config(format!("solver '{}' needs x and y rules", spec.name))),
            };
            let cfg = SolverConfig {
                rule_x: build_rule(rx, Block::X, task)?,
                rule_y: build_rule(ry, Block::Y, task)?,
                run: *opts,
                seed,
            };
            solve(task.problem(), &cfg, x0, y0)
        }
        Some(Baseline::Inv { eta, safety }) => match task {
            Task::Dl(p) => run_inv(p, eta, safety, opts, x0, y0),
            Task::Lie(_) => Err(TecuError::Config("INV applies to the l0dl task only".into())),
        },
        Some(b) => run_baseline(task.problem(), b, opts, x0, y0),
    }
}

/// `<task>_<solver>_<seed>.csv`
pub fn trace_file_name(task: TaskKind, solver: &str, seed: u64) -> String {
    format!("{}_{}_{}.csv", task.name(), solver, seed)
}

/// Output directory after applying the environment override.
pub fn resolve_output_dir(config: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.experiment.output_dir.clone(),
    }
}

/// Runs every (seed, solver) pair, writing one trace per pair and a
/// summary file into `output_dir`.
pub fn run_experiment_in(config: &ExperimentConfig, output_dir: &Path) -> Result<Vec<RunSummary>> {
    config.validate()?;
    fs::create_dir_all(output_dir).map_err(|e| TecuError::io(output_dir, e))?;
    let opts = config.run_options();
    let mut summaries = Vec::new();
    for &seed in &config.experiment.seeds {
        let task = build_task(config, seed)?;
        for spec in &config.solver {
            let res = run_solver(&task, spec, &opts, seed)?;
            let file = trace_file_name(config.experiment.task, &spec.name, seed);
            emit_trace_csv(&res.trace, output_dir.join(&file))?;
            summaries.push(RunSummary::from_result(&spec.name, seed, &file, &res));
        }
    }
    emit_summary_json(&summaries, output_dir.join(SUMMARY_FILE))?;
    Ok(summaries)
}

/// [`run_experiment_in`] with the configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    run_experiment_in(config, &config.experiment.output_dir)
}

/// Dry run: builds each seed's task, runs the oracle checks on it and
/// instantiates every solver's rules.
pub fn validate_experiment(config: &ExperimentConfig, probes: usize) -> Result<Vec<(u64, ValidationReport)>> {
    config.validate()?;
    let mut out = Vec::new();
    for &seed in &config.experiment.seeds {
        let task = build_task(config, seed)?;
        for spec in &config.solver {
            if let (Some(x), Some(y)) = (&spec.x, &spec.y) {
                build_rule(x, Block::X, &task)?;
                build_rule(y, Block::Y, &task)?;
            }
        }
        out.push((seed, validate_problem(task.problem(), probes)?));
    }
    Ok(out)
}
