//! ℓ0-regularized dictionary learning
//!
//! ```text
//! min_{W, D} λ‖W‖₀ + 𝒳_𝒟(D) + ½‖Y − DWᵀ‖²,   𝒟 = {D : ‖dᵢ‖ = 1 ∀i}
//! ```
//!
//! with `x = W` (`p×m` codes) and `y = D` (`n×m` dictionary).

use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Result, TecuError};
use crate::operators::{hard_threshold, sphere_project};
use crate::problem::{BlockProblem, Mat, Shape, FEASIBILITY_TOL};
use crate::update::gram_spectral_bound;

#[derive(Debug, Clone)]
pub struct DlInstance {
    /// `n×p` data matrix.
    pub data: Arc<Mat>,
    pub lambda: f64,
    /// Number of atoms.
    pub m: usize,
}

impl DlInstance {
    pub fn new(data: Mat, lambda: f64, m: usize) -> Self {
        DlInstance {
            data: Arc::new(data),
            lambda,
            m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.nrows() == 0 || self.data.ncols() == 0 || self.m == 0 {
            return Err(TecuError::invalid("dictionary learning: n, m and p must be at least 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(TecuError::invalid(format!("dictionary learning: lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// [`BlockProblem`] for ℓ0 dictionary learning.
#[derive(Debug, Clone)]
pub struct DlProblem {
    inst: DlInstance,
}

pub fn build_dl_problem(inst: DlInstance) -> Result<DlProblem> {
    inst.validate()?;
    Ok(DlProblem { inst })
}

impl DlProblem {
    pub fn data(&self) -> &Mat {
        &self.inst.data
    }

    pub fn data_arc(&self) -> Arc<Mat> {
        self.inst.data.clone()
    }

    pub fn lambda(&self) -> f64 {
        self.inst.lambda
    }

    pub fn n(&self) -> usize {
        self.inst.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.inst.data.ncols()
    }

    pub fn m(&self) -> usize {
        self.inst.m
    }

    /// Residual `DWᵀ − Y`.
    fn residual(&self, w: &Mat, d: &Mat) -> Mat {
        d * w.transpose() - &*self.inst.data
    }

    /// `D⁰ = sphere_project(Gaussian)`, `W⁰ = 0`.
    pub fn initial_point(&self, rng: &mut dyn RngCore) -> (Mat, Mat) {
        let g = Mat::from_fn(self.n(), self.m(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (Mat::zeros(self.p(), self.m()), sphere_project(&g))
    }
}

impl BlockProblem for DlProblem {
    fn x_shape(&self) -> Shape {
        Shape::new(self.p(), self.m())
    }

    fn y_shape(&self) -> Shape {
        Shape::new(self.n(), self.m())
    }

    fn f_value(&self, w: &Mat) -> f64 {
        self.inst.lambda * w.iter().filter(|v| **v != 0.0).count() as f64
    }

    fn g_value(&self, d: &Mat) -> f64 {
        let feasible = d
            .column_iter()
            .all(|c| (c.norm() - 1.0).abs() <= FEASIBILITY_TOL);
        if feasible {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn h_value(&self, w: &Mat, d: &Mat) -> f64 {
        0.5 * self.residual(w, d).norm_squared()
    }

    fn h_grad_x(&self, w: &Mat, d: &Mat) -> Mat {
        // (WDᵀ − Yᵀ)D
        self.residual(w, d).transpose() * d
    }

    fn h_grad_y(&self, w: &Mat, d: &Mat) -> Mat {
        // (DWᵀ − Y)W
        self.residual(w, d) * w
    }

    fn prox_f(&self, v: &Mat, tau: f64) -> Mat {
        hard_threshold(v, self.inst.lambda, tau)
    }

    fn prox_g(&self, v: &Mat, _tau: f64) -> Mat {
        sphere_project(v)
    }

    fn f_subdiff_dist(&self, w: &Mat, subgrad: &Mat) -> Option<f64> {
        // ∂(λ‖·‖₀) is {0} on the support and ℝ off it.
        let sq: f64 = w
            .iter()
            .zip(subgrad.iter())
            .filter(|(wi, _)| **wi != 0.0)
            .map(|(_, g)| g * g)
            .sum();
        Some(sq.sqrt())
    }

    fn g_subdiff_dist(&self, d: &Mat, subgrad: &Mat) -> Option<f64> {
        // Normal cone of the column sphere at dᵢ is span(dᵢ).
        let mut sq = 0.0;
        for (dc, gc) in d.column_iter().zip(subgrad.column_iter()) {
            let along = dc.dot(&gc);
            sq += (gc - dc * along).norm_squared();
        }
        Some(sq.sqrt())
    }

    fn lipschitz_x(&self, d: &Mat) -> Result<f64> {
        gram_spectral_bound(d)
    }

    fn lipschitz_y(&self, w: &Mat) -> Result<f64> {
        gram_spectral_bound(w)
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> (Mat, Mat) {
        let w = Mat::from_fn(self.p(), self.m(), |_, _| {
            if rng.random::<f64>() < 0.3 {
                rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        });
        let d = Mat::from_fn(self.n(), self.m(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (w, sphere_project(&d))
    }
}
