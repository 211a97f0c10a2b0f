//! Power-iteration bounds on `‖AᵀA‖₂`.

use crate::error::{Result, TecuError};
use crate::problem::{Block, BlockOps, BlockProblem, Mat};

const POWER_REL_TOL: f64 = 1e-4;
const POWER_MAX_ITERS: usize = 500;
/// Inflation applied to the converged Rayleigh quotient so the estimate
/// stays above the true value.
pub const LIPSCHITZ_INFLATION: f64 = 1.01;

/// Largest eigenvalue of the symmetric PSD matrix `g`, by power iteration
/// from a fixed start vector. Returns the raw Rayleigh quotient.
pub fn power_iteration(g: &Mat) -> Result<f64> {
    let n = g.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    // Deterministic start with no particular alignment to coordinate axes.
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + ((i as f64) * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0_f64;
    for _ in 0..POWER_MAX_ITERS {
        let gv = g * &v;
        let norm = gv.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = v.dot(&gv);
        v = gv / norm;
        if (next - lambda).abs() <= POWER_REL_TOL * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(TecuError::NumericalFailure(format!(
        "power iteration did not reach relative tolerance {POWER_REL_TOL} in {POWER_MAX_ITERS} iterations"
    )))
}

/// Upper estimate of `‖AᵀA‖₂ = σ_max(A)²`, computed on the smaller Gram
/// matrix and inflated by [`LIPSCHITZ_INFLATION`].
pub fn gram_spectral_bound(a: &Mat) -> Result<f64> {
    let gram = if a.nrows() < a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    Ok(power_iteration(&gram)? * LIPSCHITZ_INFLATION)
}

/// Partial Lipschitz estimate of the block gradient with the other block
/// frozen, as registered by the task.
pub fn estimate_partial_lipschitz(problem: &dyn BlockProblem, block: Block, frozen_other: &Mat) -> Result<f64> {
    problem.block_lipschitz(block, frozen_other)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_bound() {
        let l = gram_spectral_bound(&Mat::identity(5, 5)).unwrap();
        assert!((l - 1.01).abs() < 1e-12);
    }

    #[test]
    fn diagonal_case() {
        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let l = gram_spectral_bound(&d).unwrap();
        assert!(l >= 4.0 && l <= 4.0 * 1.0101);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(gram_spectral_bound(&Mat::zeros(3, 4)).unwrap(), 0.0);
    }
}
