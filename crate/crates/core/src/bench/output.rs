//! Trace CSV and summary JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::SolveResult;
use crate::error::{Result, TecuError};
use crate::problem::TraceRecord;

pub const TRACE_HEADER: &str =
    "iter,objective,phi,rel_change_x,rel_change_y,rel_change_obj,err_x,err_y,inner_x,inner_y,wall_s";

/// Renders a trace as CSV; reals use 17 significant digits.
pub fn trace_csv(trace: &[TraceRecord]) -> Result<String> {
    if trace.is_empty() {
        return Err(TecuError::invalid("cannot emit an empty trace"));
    }
    let mut out = String::with_capacity(64 + trace.len() * 200);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
            r.iteration,
            r.objective,
            r.phi,
            r.rel_change_x,
            r.rel_change_y,
            r.rel_change_obj,
            r.err_norm_x,
            r.err_norm_y,
            r.inner_steps_x,
            r.inner_steps_y,
            r.wall_time_s
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn emit_trace_csv(trace: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = trace_csv(trace)?;
    fs::write(path, text).map_err(|e| TecuError::io(path, e))
}

/// One parsed CSV row: `iter`, the seven reals, `inner_x`, `inner_y`, `wall_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub values: [f64; 7],
    pub inner_x: usize,
    pub inner_y: usize,
    pub wall_s: f64,
}

/// Parses text produced by [`trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    let mut offset = 0;
    match lines.next() {
        Some(h) if h == TRACE_HEADER => offset += h.len() + 1,
        _ => {
            return Err(TecuError::Parse {
                offset: 0,
                message: "missing or unexpected trace header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        let bad = |msg: &str| TecuError::Parse {
            offset,
            message: format!("{msg} in row '{line}'"),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(bad("expected 11 fields"));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid number"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad("invalid integer"));
        let mut values = [0.0; 7];
        for (k, v) in values.iter_mut().enumerate() {
            *v = real(fields[k + 1])?;
        }
        rows.push(TraceRow {
            iter: int(fields[0])?,
            values,
            inner_x: int(fields[8])?,
            inner_y: int(fields[9])?,
            wall_s: real(fields[10])?,
        });
        offset += line.len() + 1;
    }
    Ok(rows)
}

/// Strips the wall-time column, leaving the deterministic part of a trace.
pub fn numeric_columns(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: String,
    pub combination: String,
    pub seed: u64,
    pub outer_iterations: usize,
    pub total_inner_steps: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub wall_time_s: f64,
    pub descent_violation_count: usize,
    pub trace_file: String,
}

impl RunSummary {
    pub fn from_result(solver: &str, seed: u64, trace_file: &str, res: &SolveResult) -> Self {
        RunSummary {
            solver: solver.to_string(),
            combination: res.combination_label.clone(),
            seed,
            outer_iterations: res.iterations(),
            total_inner_steps: res.total_inner_steps(),
            converged: res.converged(),
            final_objective: res.final_objective(),
            wall_time_s: res.wall_time_s(),
            descent_violation_count: res.descent_violations.len(),
            trace_file: trace_file.to_string(),
        }
    }
}

pub fn emit_summary_json(summaries: &[RunSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(summaries)
        .map_err(|e| TecuError::InvariantViolation(format!("summary serialization: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| TecuError::io(path, e))
}
