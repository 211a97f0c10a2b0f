//! Retinex decomposition for low-light enhancement
//!
//! ```text
//! min_{I, R} (α/2)‖∇I‖² + 𝒳_ℐ(I) + 𝒳_ℛ(R) + ½‖O − I⊙R‖²
//! ℐ = {I : 0 ≤ Iᵢ ≤ Oᵢ},  ℛ = {R : 0 ≤ Rᵢ ≤ 1}
//! ```
//!
//! with `x = I` (illumination) and `y = R` (reflectance). `∇` is the
//! forward-difference operator with replicated (Neumann) borders.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{Result, TecuError};
use crate::operators::{box_project, clamp_scalar};
use crate::problem::{BlockProblem, Mat, Shape, FEASIBILITY_TOL};

/// Number of difference directions in the smoothness term.
const DIFF_DIRECTIONS: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct LieInstance {
    /// Observed luminance in `[0, 1]`, `height × width`.
    pub observed: Arc<Mat>,
    pub alpha: f64,
}

impl LieInstance {
    pub fn new(observed: Mat, alpha: f64) -> Self {
        LieInstance {
            observed: Arc::new(observed),
            alpha,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LieProblem {
    inst: LieInstance,
    zeros: Mat,
}

pub fn build_lie_problem(inst: LieInstance) -> Result<LieProblem> {
    let o = &inst.observed;
    if o.is_empty() {
        return Err(TecuError::invalid("retinex: empty image"));
    }
    if o.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(TecuError::invalid("retinex: observed image must lie in [0, 1]"));
    }
    if !(inst.alpha >= 0.0) {
        return Err(TecuError::invalid(format!("retinex: alpha must be non-negative, got {}", inst.alpha)));
    }
    let zeros = Mat::zeros(o.nrows(), o.ncols());
    Ok(LieProblem { inst, zeros })
}

/// Forward differences `(∂ₕI, ∂ᵥI)`, zero across the last column/row.
pub fn forward_differences(img: &Mat) -> (Mat, Mat) {
    let (h, w) = img.shape();
    let dx = Mat::from_fn(h, w, |i, j| if j + 1 < w { img[(i, j + 1)] - img[(i, j)] } else { 0.0 });
    let dy = Mat::from_fn(h, w, |i, j| if i + 1 < h { img[(i + 1, j)] - img[(i, j)] } else { 0.0 });
    (dx, dy)
}

/// `∇ᵀ∇ I`, the positive semidefinite Neumann Laplacian.
pub fn neumann_laplacian(img: &Mat) -> Mat {
    let (dx, dy) = forward_differences(img);
    let (h, w) = img.shape();
    Mat::from_fn(h, w, |i, j| {
        let mut v = -dx[(i, j)] - dy[(i, j)];
        if j > 0 {
            v += dx[(i, j - 1)];
        }
        if i > 0 {
            v += dy[(i - 1, j)];
        }
        v
    })
}

fn box_membership(v: &Mat, lo: &Mat, hi: &Mat) -> bool {
    v.iter()
        .zip(lo.iter().zip(hi.iter()))
        .all(|(x, (l, h))| *x >= l - FEASIBILITY_TOL && *x <= h + FEASIBILITY_TOL)
}

/// Distance from `g` to the normal cone of `[lo, hi]` at `v`.
fn box_normal_dist(v: &Mat, g: &Mat, lo: &Mat, hi: &Mat) -> f64 {
    let mut sq = 0.0;
    for i in 0..v.len() {
        let (x, gi, l, h) = (v[i], g[i], lo[i], hi[i]);
        let at_lo = x <= l + FEASIBILITY_TOL;
        let at_hi = x >= h - FEASIBILITY_TOL;
        let d = match (at_lo, at_hi) {
            (true, true) => 0.0,
            (true, false) => gi.max(0.0),
            (false, true) => (-gi).max(0.0),
            (false, false) => gi.abs(),
        };
        sq += d * d;
    }
    sq.sqrt()
}

impl LieProblem {
    pub fn observed(&self) -> &Mat {
        &self.inst.observed
    }

    pub fn observed_arc(&self) -> Arc<Mat> {
        self.inst.observed.clone()
    }

    pub fn alpha(&self) -> f64 {
        self.inst.alpha
    }

    /// `I⁰ = O`, `R⁰ = 0.5`.
    pub fn initial_point(&self) -> (Mat, Mat) {
        let o = self.observed().clone();
        let r = Mat::from_element(o.nrows(), o.ncols(), 0.5);
        (o, r)
    }

    fn ones(&self) -> Mat {
        self.zeros.map(|_| 1.0)
    }
}

impl BlockProblem for LieProblem {
    fn x_shape(&self) -> Shape {
        Shape::of(self.observed())
    }

    fn y_shape(&self) -> Shape {
        Shape::of(self.observed())
    }

    fn f_value(&self, i: &Mat) -> f64 {
        if box_membership(i, &self.zeros, self.observed()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn g_value(&self, r: &Mat) -> f64 {
        if box_membership(r, &self.zeros, &self.ones()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn h_value(&self, i: &Mat, r: &Mat) -> f64 {
        let (dx, dy) = forward_differences(i);
        let smooth = 0.5 * self.inst.alpha * (dx.norm_squared() + dy.norm_squared());
        let fit = 0.5 * (self.observed() - i.component_mul(r)).norm_squared();
        smooth + fit
    }

    fn h_grad_x(&self, i: &Mat, r: &Mat) -> Mat {
        let resid = i.component_mul(r) - self.observed();
        neumann_laplacian(i) * self.inst.alpha + resid.component_mul(r)
    }

    fn h_grad_y(&self, i: &Mat, r: &Mat) -> Mat {
        (i.component_mul(r) - self.observed()).component_mul(i)
    }

    fn prox_f(&self, v: &Mat, _tau: f64) -> Mat {
        box_project(v, &self.zeros, self.observed()).expect("observed image is non-negative")
    }

    fn prox_g(&self, v: &Mat, _tau: f64) -> Mat {
        clamp_scalar(v, 0.0, 1.0)
    }

    fn f_subdiff_dist(&self, i: &Mat, subgrad: &Mat) -> Option<f64> {
        Some(box_normal_dist(i, subgrad, &self.zeros, self.observed()))
    }

    fn g_subdiff_dist(&self, r: &Mat, subgrad: &Mat) -> Option<f64> {
        Some(box_normal_dist(r, subgrad, &self.zeros, &self.ones()))
    }

    /// `4α·(difference directions) + max(R⊙R)`.
    fn lipschitz_x(&self, r: &Mat) -> Result<f64> {
        let max_r2 = r.iter().fold(0.0_f64, |m, v| m.max(v * v));
        Ok(4.0 * self.inst.alpha * DIFF_DIRECTIONS + max_r2)
    }

    /// `max(I⊙I)`.
    fn lipschitz_y(&self, i: &Mat) -> Result<f64> {
        Ok(i.iter().fold(0.0_f64, |m, v| m.max(v * v)))
    }

    /// Closed form only without the smoothness term, where the problem is
    /// separable per pixel.
    fn exact_prox_x(&self, anchor: &Mat, r: &Mat, zeta: f64) -> Option<Mat> {
        if self.inst.alpha != 0.0 {
            return None;
        }
        let o = self.observed();
        let num = o.component_mul(r) + anchor * zeta;
        let den = r.map(|v| v * v + zeta);
        let raw = num.component_div(&den);
        box_project(&raw, &self.zeros, o).ok()
    }

    /// `R = clamp((O⊙I + ζR^t)/(I⊙I + ζ), 0, 1)`.
    fn exact_prox_y(&self, anchor: &Mat, i: &Mat, zeta: f64) -> Option<Mat> {
        let num = self.observed().component_mul(i) + anchor * zeta;
        let den = i.map(|v| v * v + zeta);
        Some(clamp_scalar(&num.component_div(&den), 0.0, 1.0))
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> (Mat, Mat) {
        let o = self.observed();
        let i = o.map(|ov| ov * rng.random::<f64>());
        let r = o.map(|_| rng.random::<f64>());
        (i, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_constant_is_zero() {
        let c = Mat::from_element(5, 7, 0.3);
        assert!(neumann_laplacian(&c).abs().max() < 1e-15);
    }

    #[test]
    fn laplacian_quadratic_form() {
        let img = Mat::from_fn(6, 5, |i, j| ((i * 7 + j * 3) as f64 * 0.37).sin());
        let (dx, dy) = forward_differences(&img);
        let lhs = neumann_laplacian(&img).dot(&img);
        let rhs = dx.norm_squared() + dy.norm_squared();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn reflectance_closed_form_scalar() {
        let p = build_lie_problem(LieInstance::new(Mat::from_element(1, 1, 0.5), 0.1)).unwrap();
        let r = p
            .exact_prox_y(&Mat::from_element(1, 1, 0.0), &Mat::from_element(1, 1, 1.0), 1.0)
            .unwrap();
        assert!((r[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_observation_rejected() {
        assert!(build_lie_problem(LieInstance::new(Mat::from_element(2, 2, 1.5), 0.1)).is_err());
    }
}
