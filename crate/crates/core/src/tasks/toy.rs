use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::problem::{BlockProblem, Mat, Shape};

/// `f = g = 0`, `H(x, y) = ½‖x‖² + ½‖y‖²`. Separable and strongly convex;
/// used for sanity checks of the update rules and the outer loop.
#[derive(Debug, Clone)]
pub struct SeparableQuadratic {
    x_shape: Shape,
    y_shape: Shape,
}

impl SeparableQuadratic {
    pub fn new(x_shape: Shape, y_shape: Shape) -> Self {
        SeparableQuadratic { x_shape, y_shape }
    }
}

impl BlockProblem for SeparableQuadratic {
    fn x_shape(&self) -> Shape {
        self.x_shape
    }

    fn y_shape(&self) -> Shape {
        self.y_shape
    }

    fn f_value(&self, _x: &Mat) -> f64 {
        0.0
    }

    fn g_value(&self, _y: &Mat) -> f64 {
        0.0
    }

    fn h_value(&self, x: &Mat, y: &Mat) -> f64 {
        0.5 * (x.norm_squared() + y.norm_squared())
    }

    fn h_grad_x(&self, x: &Mat, _y: &Mat) -> Mat {
        x.clone()
    }

    fn h_grad_y(&self, _x: &Mat, y: &Mat) -> Mat {
        y.clone()
    }

    fn prox_f(&self, v: &Mat, _tau: f64) -> Mat {
        v.clone()
    }

    fn prox_g(&self, v: &Mat, _tau: f64) -> Mat {
        v.clone()
    }

    fn f_subdiff_dist(&self, _x: &Mat, subgrad: &Mat) -> Option<f64> {
        Some(subgrad.norm())
    }

    fn g_subdiff_dist(&self, _y: &Mat, subgrad: &Mat) -> Option<f64> {
        Some(subgrad.norm())
    }

    fn lipschitz_x(&self, _y: &Mat) -> Result<f64> {
        Ok(1.0)
    }

    fn lipschitz_y(&self, _x: &Mat) -> Result<f64> {
        Ok(1.0)
    }

    fn exact_prox_x(&self, anchor: &Mat, _y: &Mat, zeta: f64) -> Option<Mat> {
        Some(anchor * (zeta / (1.0 + zeta)))
    }

    fn exact_prox_y(&self, anchor: &Mat, _x: &Mat, zeta: f64) -> Option<Mat> {
        Some(anchor * (zeta / (1.0 + zeta)))
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> (Mat, Mat) {
        let x = Mat::from_fn(self.x_shape.rows, self.x_shape.cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = Mat::from_fn(self.y_shape.rows, self.y_shape.cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        (x, y)
    }
}
