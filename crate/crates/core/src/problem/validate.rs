use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{check_shape, Block, BlockOps, BlockProblem, Mat};
use crate::error::{Result, TecuError};

const FD_STEP: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-4;
const PROX_TOL: f64 = 1e-8;
const VALIDATION_SEED: u64 = 0x7ec0_0001;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub probe: usize,
    pub passed: bool,
    /// Relative gradient error, or subdifferential distance for prox checks.
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Whether every check whose name starts with `prefix` passed.
    pub fn passed(&self, prefix: &str) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .all(|c| c.passed)
    }
}

fn oracle_err(probe: usize, what: &str, msg: String) -> TecuError {
    TecuError::Oracle {
        context: format!("probe {probe}, {what}"),
        source: Box::new(TecuError::NumericalFailure(msg)),
    }
}

fn central_difference(
    problem: &dyn BlockProblem,
    block: Block,
    u: &Mat,
    other: &Mat,
) -> Mat {
    let mut fd = Mat::zeros(u.nrows(), u.ncols());
    let mut probe = u.clone();
    for i in 0..u.len() {
        let orig = probe[i];
        probe[i] = orig + FD_STEP;
        let up = problem.coupling_value(block, &probe, other);
        probe[i] = orig - FD_STEP;
        let down = problem.coupling_value(block, &probe, other);
        probe[i] = orig;
        fd[i] = (up - down) / (2.0 * FD_STEP);
    }
    fd
}

fn gaussian_like(rng: &mut ChaCha8Rng, like: &Mat, scale: f64) -> Mat {
    Mat::from_fn(like.nrows(), like.ncols(), |_, _| {
        scale * rng.sample::<f64, _>(StandardNormal)
    })
}

/// Checks the gradient oracles against central finite differences and the
/// proximal oracles against their first-order inclusion at `probe_count`
/// random feasible points.
pub fn validate_problem(problem: &dyn BlockProblem, probe_count: usize) -> Result<ValidationReport> {
    if probe_count == 0 {
        return Err(TecuError::invalid("probe_count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let mut report = ValidationReport::default();

    for probe in 0..probe_count {
        let (x, y) = problem.random_point(&mut rng);
        check_shape("random_point x", problem.x_shape(), &x)
            .map_err(|e| oracle_err(probe, "random_point", e.to_string()))?;
        check_shape("random_point y", problem.y_shape(), &y)
            .map_err(|e| oracle_err(probe, "random_point", e.to_string()))?;

        for block in [Block::X, Block::Y] {
            let (u, other) = match block {
                Block::X => (&x, &y),
                Block::Y => (&y, &x),
            };
            let grad = problem.block_grad(block, u, other);
            let what = format!("h_grad_{}", block.name());
            if grad.shape() != u.shape() {
                return Err(oracle_err(probe, &what, "gradient has wrong shape".into()));
            }
            if grad.iter().any(|v| !v.is_finite()) {
                return Err(oracle_err(probe, &what, "non-finite gradient".into()));
            }
            let fd = central_difference(problem, block, u, other);
            let denom = grad.norm().max(fd.norm()).max(1e-8);
            let rel = (&fd - &grad).norm() / denom;
            report.checks.push(CheckResult {
                name: format!("gradient_{}", block.name()),
                probe,
                passed: rel < GRAD_REL_TOL,
                value: rel,
                tolerance: GRAD_REL_TOL,
            });

            // Prox inclusion: tau (v − w) ∈ ∂h(w) for w = prox(v, tau).
            let tau = rng.random_range(0.5..4.0);
            let v = u + gaussian_like(&mut rng, u, 0.5);
            let w = problem.block_prox(block, &v, tau);
            if w.shape() != v.shape() {
                return Err(oracle_err(
                    probe,
                    &format!("prox_{}", block.name()),
                    "prox output has wrong shape".into(),
                ));
            }
            let subgrad = (&v - &w) * tau;
            if let Some(dist) = problem.block_subdiff_dist(block, &w, &subgrad) {
                report.checks.push(CheckResult {
                    name: format!("prox_{}", block.name()),
                    probe,
                    passed: dist <= PROX_TOL,
                    value: dist,
                    tolerance: PROX_TOL,
                });
            }
        }
    }
    Ok(report)
}
