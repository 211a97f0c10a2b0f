//! Scaled ADMM for the unit-norm dictionary subproblem
//!
//! ```text
//! min_D ½‖Y − DWᵀ‖² + (η/2)‖D − D_anchor‖² + 𝒳_𝒟(D)
//! ```
//!
//! split as `D = Z` with `Z` carrying the column-sphere constraint.

use std::sync::Arc;

use nalgebra::{Cholesky, Dyn};

use super::prox::sphere_project;
use crate::error::{Result, TecuError};
use crate::problem::{BlockProblem, Mat, Subproblem};
use crate::update::EmbeddedOperator;

/// Per-outer-iteration ADMM state.
#[derive(Clone)]
pub struct AdmmContext {
    /// Splitting variable, always on the constraint set.
    pub z: Mat,
    /// Scaled dual variable.
    pub u: Mat,
    pub rho: f64,
    factor: Cholesky<f64, Dyn>,
    /// `YW + η·D_anchor`, fixed within the outer iteration.
    rhs_fixed: Mat,
    last_primal_residual: f64,
}

impl std::fmt::Debug for AdmmContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdmmContext")
            .field("rho", &self.rho)
            .field("primal_residual", &self.last_primal_residual)
            .finish()
    }
}

/// `ρ = max(1, trace(WᵀW)/m)`.
pub fn default_rho(w: &Mat) -> f64 {
    let m = w.ncols().max(1) as f64;
    (w.norm_squared() / m).max(1.0)
}

impl AdmmContext {
    /// Starts from `Z = D_cur`, `U = 0` and factors `WᵀW + (η+ρ)I`.
    pub fn new(d_cur: &Mat, w: &Mat, y: &Mat, d_anchor: &Mat, eta: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(TecuError::invalid(format!("ADMM penalty must be positive, got {rho}")));
        }
        if d_cur.shape() != d_anchor.shape() || y.nrows() != d_cur.nrows() || w.ncols() != d_cur.ncols() || w.nrows() != y.ncols() {
            return Err(TecuError::invalid("ADMM: inconsistent D/W/Y shapes"));
        }
        let m = w.ncols();
        let mut gram = w.transpose() * w;
        for i in 0..m {
            gram[(i, i)] += eta + rho;
        }
        let factor = Cholesky::new(gram)
            .ok_or_else(|| TecuError::NumericalFailure("ADMM system WᵀW + (η+ρ)I is not positive definite".into()))?;
        let rhs_fixed = y * w + d_anchor * eta;
        Ok(AdmmContext {
            z: d_cur.clone(),
            u: Mat::zeros(d_cur.nrows(), d_cur.ncols()),
            rho,
            factor,
            rhs_fixed,
            last_primal_residual: f64::INFINITY,
        })
    }

    /// `‖D − Z‖` after the most recent pass.
    pub fn primal_residual(&self) -> f64 {
        self.last_primal_residual
    }
}

/// One scaled ADMM pass. Returns the feasible iterate `Z`.
pub fn admm_d_step(ctx: &mut AdmmContext) -> Result<Mat> {
    let rhs = &ctx.rhs_fixed + (&ctx.z - &ctx.u) * ctx.rho;
    // D G = rhs with G symmetric, so Dᵀ = G⁻¹ rhsᵀ.
    let d = ctx.factor.solve(&rhs.transpose()).transpose();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(TecuError::NumericalFailure("ADMM D-update produced non-finite values".into()));
    }
    ctx.z = sphere_project(&(&d + &ctx.u));
    ctx.u += &d - &ctx.z;
    ctx.last_primal_residual = (&d - &ctx.z).norm();
    Ok(ctx.z.clone())
}

/// [`EmbeddedOperator`] running ADMM passes on the dictionary block. The
/// frozen block is the code matrix `W`.
#[derive(Clone)]
pub struct AdmmDictionaryOperator {
    data: Arc<Mat>,
    rho: Option<f64>,
    ctx: Option<AdmmContext>,
}

impl AdmmDictionaryOperator {
    pub fn new(data: Arc<Mat>) -> Self {
        AdmmDictionaryOperator {
            data,
            rho: None,
            ctx: None,
        }
    }

    /// Use a fixed penalty instead of [`default_rho`].
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }
}

impl EmbeddedOperator for AdmmDictionaryOperator {
    fn name(&self) -> &str {
        "admm"
    }

    fn reset(&mut self, _problem: &dyn BlockProblem, sub: &Subproblem<'_>, eta: f64) -> Result<()> {
        let w = sub.frozen;
        let rho = self.rho.unwrap_or_else(|| default_rho(w));
        self.ctx = Some(AdmmContext::new(sub.anchor, w, &self.data, sub.anchor, eta, rho)?);
        Ok(())
    }

    fn step(&mut self, _problem: &dyn BlockProblem, _current: &Mat, _sub: &Subproblem<'_>, _eta: f64) -> Result<Mat> {
        let ctx = self
            .ctx
            .as_mut()
            .ok_or_else(|| TecuError::InvariantViolation("ADMM operator stepped before reset".into()))?;
        admm_d_step(ctx)
    }

    fn box_clone(&self) -> Box<dyn EmbeddedOperator> {
        Box::new(AdmmDictionaryOperator {
            data: self.data.clone(),
            rho: self.rho,
            ctx: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_fixed_point() {
        let d = sphere_project(&Mat::from_column_slice(3, 2, &[1.0, 2.0, 2.0, 0.0, 1.0, 0.0]));
        let w = Mat::zeros(5, 2);
        let y = Mat::from_fn(3, 5, |i, j| (i + j) as f64);
        let mut ctx = AdmmContext::new(&d, &w, &y, &d, 1.0, default_rho(&w)).unwrap();
        let out = admm_d_step(&mut ctx).unwrap();
        assert!((&out - &d).norm() < 1e-14);
    }

    #[test]
    fn output_columns_unit_norm() {
        let d = sphere_project(&Mat::from_fn(4, 3, |i, j| ((i * 3 + j) as f64).sin()));
        let w = Mat::from_fn(7, 3, |i, j| ((i + 2 * j) as f64).cos());
        let y = Mat::from_fn(4, 7, |i, j| ((i * j) as f64 * 0.3).sin());
        let mut ctx = AdmmContext::new(&d, &w, &y, &d, 1.0, default_rho(&w)).unwrap();
        for _ in 0..5 {
            let z = admm_d_step(&mut ctx).unwrap();
            for col in z.column_iter() {
                assert!((col.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
