//! Python bindings. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tecu::bench::{load_config, run_experiment_in};
use tecu::operators::{
    AdmmDictionaryOperator, IlluminationOperator, PithOperator, ProxGradientOperator,
};
use tecu::prelude::*;
use tecu::tasks::{DlProblem, LieProblem};

fn py_err(e: TecuError) -> PyErr {
    match e {
        TecuError::Io { .. } => PyIOError::new_err(e.to_string()),
        e if e.is_config_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

pub fn to_mat(rows: &[Vec<f64>]) -> PyResult<Mat> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("ragged matrix: rows differ in length"));
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn from_mat(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn run_options(max_outer: usize, tol: f64) -> RunOptions {
    RunOptions {
        max_outer,
        stop_tol: tol,
        ..RunOptions::default()
    }
}

/// Outcome of a solve.
#[pyclass(frozen, name = "SolveResult")]
struct PySolveResult {
    inner: SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged()
    }

    #[getter]
    fn combination_label(&self) -> String {
        self.inner.combination_label.clone()
    }

    #[getter]
    fn final_objective(&self) -> f64 {
        self.inner.final_objective()
    }

    #[getter]
    fn total_inner_steps(&self) -> usize {
        self.inner.total_inner_steps()
    }

    #[getter]
    fn wall_time_s(&self) -> f64 {
        self.inner.wall_time_s()
    }

    #[getter]
    fn descent_violations(&self) -> usize {
        self.inner.descent_violations.len()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        from_mat(&self.inner.final_x)
    }

    #[getter]
    fn y(&self) -> Vec<Vec<f64>> {
        from_mat(&self.inner.final_y)
    }

    /// Objective value per iteration.
    fn objectives(&self) -> Vec<f64> {
        self.inner.trace.iter().map(|r| r.objective).collect()
    }

    /// One dict per iteration with the numeric trace fields.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .trace
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("iter", r.iteration)?;
                d.set_item("objective", r.objective)?;
                d.set_item("phi", r.phi)?;
                d.set_item("rel_change_x", r.rel_change_x)?;
                d.set_item("rel_change_y", r.rel_change_y)?;
                d.set_item("rel_change_obj", r.rel_change_obj)?;
                d.set_item("err_x", r.err_norm_x)?;
                d.set_item("err_y", r.err_norm_y)?;
                d.set_item("inner_x", r.inner_steps_x)?;
                d.set_item("inner_y", r.inner_steps_y)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(label={:?}, iterations={}, converged={}, objective={:.6e})",
            self.inner.combination_label,
            self.inner.iterations(),
            self.inner.converged(),
            self.inner.final_objective()
        )
    }
}

/// Builds the rule for one block from a combination code.
fn classical_rule(code: u8, zeta: f64) -> Option<UpdateRule> {
    match code {
        1 | 4 => Some(UpdateRule::Proximal { zeta }),
        2 | 5 => Some(UpdateRule::prox_linear()),
        _ => None,
    }
}

fn embedded(op: Box<dyn EmbeddedOperator>, c: f64, eta: f64, k_max: usize) -> UpdateRule {
    UpdateRule::Embedded(EmbeddedRule::new(op, c, eta).with_k_max(k_max))
}

/// ℓ0-regularized dictionary learning, `x = W` (codes), `y = D` (dictionary).
#[pyclass(frozen, name = "DictionaryLearning")]
struct PyDictionaryLearning {
    problem: DlProblem,
}

#[pymethods]
impl PyDictionaryLearning {
    #[new]
    #[pyo3(signature = (data, lam, m))]
    fn new(data: Vec<Vec<f64>>, lam: f64, m: usize) -> PyResult<Self> {
        let problem = build_dl_problem(DlInstance::new(to_mat(&data)?, lam, m)).map_err(py_err)?;
        Ok(PyDictionaryLearning { problem })
    }

    /// Synthetic instance `Y = D★W★ᵀ + noise`.
    #[staticmethod]
    #[pyo3(signature = (n = 16, m = 32, p = 200, sparsity = 3, noise_sigma = 0.01, lam = 0.1, seed = 0))]
    fn synthetic(n: usize, m: usize, p: usize, sparsity: usize, noise_sigma: f64, lam: f64, seed: u64) -> PyResult<Self> {
        let spec = SynthSpec {
            n,
            m,
            p,
            sparsity,
            noise_sigma,
            seed,
        };
        let data = synth_dl_data(&spec).map_err(py_err)?;
        Self::new(from_mat(&data.y), lam, m)
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.problem.n(), self.problem.m(), self.problem.p())
    }

    fn objective(&self, w: Vec<Vec<f64>>, d: Vec<Vec<f64>>) -> PyResult<f64> {
        evaluate_objective(&self.problem, &to_mat(&w)?, &to_mat(&d)?).map_err(py_err)
    }

    /// `(W⁰, D⁰)` drawn from `seed`.
    fn initial_point(&self, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (w, d) = self.problem.initial_point(&mut seeded_rng(seed));
        (from_mat(&w), from_mat(&d))
    }

    /// Finite-difference and prox checks; returns the number of failures.
    #[pyo3(signature = (probes = 10))]
    fn validate(&self, probes: usize) -> PyResult<usize> {
        Ok(validate_problem(&self.problem, probes).map_err(py_err)?.failures().count())
    }

    /// Runs a combination such as "2-6" or "3-6". Embedded W uses PITH,
    /// embedded D uses ADMM.
    #[pyo3(signature = (combination = "2-6", c = 0.4, eta = 1.0, k_max = 20, max_outer = 500, tol = 1e-4, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        py: Python<'_>,
        combination: &str,
        c: f64,
        eta: f64,
        k_max: usize,
        max_outer: usize,
        tol: f64,
        seed: u64,
    ) -> PyResult<PySolveResult> {
        let combo = Combination::parse(combination).map_err(py_err)?;
        let data = self.problem.data_arc();
        let rule_x = classical_rule(combo.x, 1.0)
            .unwrap_or_else(|| embedded(Box::new(PithOperator::new(data.clone(), self.problem.lambda())), c, eta, k_max));
        let rule_y =
            classical_rule(combo.y, 1.0).unwrap_or_else(|| embedded(Box::new(AdmmDictionaryOperator::new(data)), c, eta, k_max));
        let cfg = SolverConfig {
            rule_x,
            rule_y,
            run: run_options(max_outer, tol),
            seed,
        };
        let (w0, d0) = self.problem.initial_point(&mut seeded_rng(seed));
        let problem = &self.problem;
        let inner = py.detach(move || solve(problem, &cfg, w0, d0)).map_err(py_err)?;
        Ok(PySolveResult { inner })
    }

    /// Runs "palm", "ipalm", "bcu" or "inv" from the same initialization as `solve`.
    #[pyo3(signature = (name = "palm", max_outer = 500, tol = 1e-4, seed = 0))]
    fn baseline(&self, py: Python<'_>, name: &str, max_outer: usize, tol: f64, seed: u64) -> PyResult<PySolveResult> {
        let opts = run_options(max_outer, tol);
        let (w0, d0) = self.problem.initial_point(&mut seeded_rng(seed));
        let p = &self.problem;
        let inner = match name.to_ascii_lowercase().as_str() {
            "palm" => py.detach(|| run_baseline(p, Baseline::palm(), &opts, w0, d0)),
            "ipalm" => py.detach(|| run_baseline(p, Baseline::ipalm(), &opts, w0, d0)),
            "bcu" => py.detach(|| run_baseline(p, Baseline::bcu(), &opts, w0, d0)),
            "inv" => match Baseline::inv() {
                Baseline::Inv { eta, safety } => py.detach(|| run_inv(p, eta, safety, &opts, w0, d0)),
                _ => unreachable!(),
            },
            other => return Err(PyValueError::new_err(format!("unknown baseline '{other}'"))),
        }
        .map_err(py_err)?;
        Ok(PySolveResult { inner })
    }
}

/// Retinex decomposition `O ≈ I⊙R`, `x = I`, `y = R`.
#[pyclass(frozen, name = "Retinex")]
struct PyRetinex {
    problem: LieProblem,
}

#[pymethods]
impl PyRetinex {
    #[new]
    #[pyo3(signature = (observed, alpha = 0.01))]
    fn new(observed: Vec<Vec<f64>>, alpha: f64) -> PyResult<Self> {
        let problem = build_lie_problem(LieInstance::new(to_mat(&observed)?, alpha)).map_err(py_err)?;
        Ok(PyRetinex { problem })
    }

    /// Synthetic low-light image; returns `(problem, illumination, reflectance)`.
    #[staticmethod]
    #[pyo3(signature = (size = 32, seed = 0, alpha = 0.01))]
    fn synthetic(size: usize, seed: u64, alpha: f64) -> PyResult<(Self, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let s = synth_retinex(size, seed);
        let p = Self::new(from_mat(&s.observed), alpha)?;
        Ok((p, from_mat(&s.illumination), from_mat(&s.reflectance)))
    }

    fn objective(&self, i: Vec<Vec<f64>>, r: Vec<Vec<f64>>) -> PyResult<f64> {
        evaluate_objective(&self.problem, &to_mat(&i)?, &to_mat(&r)?).map_err(py_err)
    }

    #[pyo3(signature = (probes = 10))]
    fn validate(&self, probes: usize) -> PyResult<usize> {
        Ok(validate_problem(&self.problem, probes).map_err(py_err)?.failures().count())
    }

    /// Runs a combination such as "3-4". Embedded I uses the smoothing
    /// propagator, embedded R uses proximal gradient passes.
    #[pyo3(signature = (combination = "3-4", c = 0.4, eta = 1.0, k_max = 20, radius = 2, max_outer = 300, tol = 1e-4))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        py: Python<'_>,
        combination: &str,
        c: f64,
        eta: f64,
        k_max: usize,
        radius: i64,
        max_outer: usize,
        tol: f64,
    ) -> PyResult<PySolveResult> {
        let combo = Combination::parse(combination).map_err(py_err)?;
        let rule_x = classical_rule(combo.x, 1.0).unwrap_or_else(|| {
            embedded(Box::new(IlluminationOperator::new(self.problem.observed_arc(), radius)), c, eta, k_max)
        });
        let rule_y =
            classical_rule(combo.y, 1.0).unwrap_or_else(|| embedded(Box::new(ProxGradientOperator::default()), c, eta, k_max));
        let cfg = SolverConfig {
            rule_x,
            rule_y,
            run: run_options(max_outer, tol),
            seed: 0,
        };
        let (i0, r0) = self.problem.initial_point();
        let problem = &self.problem;
        let inner = py.detach(move || solve(problem, &cfg, i0, r0)).map_err(py_err)?;
        Ok(PySolveResult { inner })
    }
}

/// Proximal map of `lam·‖·‖₀` at weight `tau`.
#[pyfunction]
fn hard_threshold(v: Vec<Vec<f64>>, lam: f64, tau: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(from_mat(&tecu::operators::hard_threshold(&to_mat(&v)?, lam, tau)))
}

/// Normalizes every column to unit length.
#[pyfunction]
fn sphere_project(d: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(from_mat(&tecu::operators::sphere_project(&to_mat(&d)?)))
}

/// Label reported for a combination code, e.g. "2-5" -> "PALM".
#[pyfunction]
fn combination_label(code: &str) -> PyResult<String> {
    Ok(Combination::parse(code).map_err(py_err)?.label())
}

/// Runs a TOML experiment config and returns the summary rows as dicts.
#[pyfunction]
#[pyo3(signature = (path, output_dir = None))]
fn run_config<'py>(py: Python<'py>, path: PathBuf, output_dir: Option<PathBuf>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = load_config(&path).map_err(py_err)?;
    let dir = output_dir.unwrap_or_else(|| cfg.experiment.output_dir.clone());
    let rows = py.detach(|| run_experiment_in(&cfg, &dir)).map_err(py_err)?;
    rows.iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("solver", &s.solver)?;
            d.set_item("combination", &s.combination)?;
            d.set_item("seed", s.seed)?;
            d.set_item("outer_iterations", s.outer_iterations)?;
            d.set_item("total_inner_steps", s.total_inner_steps)?;
            d.set_item("converged", s.converged)?;
            d.set_item("final_objective", s.final_objective)?;
            d.set_item("descent_violation_count", s.descent_violation_count)?;
            d.set_item("trace_file", &s.trace_file)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn tecu_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyDictionaryLearning>()?;
    m.add_class::<PyRetinex>()?;
    m.add_function(wrap_pyfunction!(hard_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_project, m)?)?;
    m.add_function(wrap_pyfunction!(combination_label, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = to_mat(&rows).unwrap();
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(from_mat(&m), rows);
    }
}
