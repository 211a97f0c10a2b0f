//! Two-block composite problems `Ψ(x, y) = f(x) + g(y) + H(x, y)`.
//!
//! A concrete task implements [`BlockProblem`]: values of the separable
//! terms, value and partial gradients of the smooth coupling `H`, and the
//! exact proximal maps of `f` and `g`. Everything else in the crate (update
//! rules, the outer loop, baselines) is written against this trait.

mod state;
mod validate;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::{Result, TecuError};

pub use state::{AppliedUpdate, IterateState, Subproblem, TraceRecord};
pub use validate::{validate_problem, CheckResult, ValidationReport};

/// Dense block variable. Vectors are stored as single-column matrices and
/// images as `height × width` matrices.
pub type Mat = DMatrix<f64>;

/// Absolute per-entry tolerance used when testing indicator membership.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Which of the two blocks an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    X,
    Y,
}

impl Block {
    pub fn name(self) -> &'static str {
        match self {
            Block::X => "x",
            Block::Y => "y",
        }
    }
}

/// `(rows, cols)` of a block variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub fn of(m: &Mat) -> Self {
        Shape::new(m.nrows(), m.ncols())
    }

    pub fn zeros(self) -> Mat {
        Mat::zeros(self.rows, self.cols)
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Oracle bundle for one two-block task.
///
/// Implementations must be free of hidden mutable state so that independent
/// solves can share a problem across threads.
pub trait BlockProblem: Send + Sync {
    fn x_shape(&self) -> Shape;
    fn y_shape(&self) -> Shape;

    /// `f(x)`; `f64::INFINITY` outside the domain of an indicator.
    fn f_value(&self, x: &Mat) -> f64;
    /// `g(y)`; `f64::INFINITY` outside the domain of an indicator.
    fn g_value(&self, y: &Mat) -> f64;
    fn h_value(&self, x: &Mat, y: &Mat) -> f64;
    fn h_grad_x(&self, x: &Mat, y: &Mat) -> Mat;
    fn h_grad_y(&self, x: &Mat, y: &Mat) -> Mat;

    /// Exact minimizer of `f(w) + (tau/2)‖w − v‖²`.
    fn prox_f(&self, v: &Mat, tau: f64) -> Mat;
    /// Exact minimizer of `g(w) + (tau/2)‖w − v‖²`.
    fn prox_g(&self, v: &Mat, tau: f64) -> Mat;

    /// Distance from `subgrad` to the limiting subdifferential `∂f(x)`, when
    /// it has a computable form.
    fn f_subdiff_dist(&self, _x: &Mat, _subgrad: &Mat) -> Option<f64> {
        None
    }

    fn g_subdiff_dist(&self, _y: &Mat, _subgrad: &Mat) -> Option<f64> {
        None
    }

    /// Upper bound on the Lipschitz constant of `x ↦ ∇ₓH(x, y)`.
    fn lipschitz_x(&self, y: &Mat) -> Result<f64>;
    /// Upper bound on the Lipschitz constant of `y ↦ ∇ᵧH(x, y)`.
    fn lipschitz_y(&self, x: &Mat) -> Result<f64>;

    /// Exact solution of `min f(x) + H(x, y) + (zeta/2)‖x − anchor‖²`, if
    /// the task registers one.
    fn exact_prox_x(&self, _anchor: &Mat, _y: &Mat, _zeta: f64) -> Option<Mat> {
        None
    }

    /// Exact solution of `min g(y) + H(x, y) + (zeta/2)‖y − anchor‖²`.
    fn exact_prox_y(&self, _anchor: &Mat, _x: &Mat, _zeta: f64) -> Option<Mat> {
        None
    }

    /// A random feasible point, used for oracle validation.
    fn random_point(&self, rng: &mut dyn RngCore) -> (Mat, Mat);
}

/// Block-indexed access to a [`BlockProblem`]. `other` is always the frozen
/// value of the opposite block.
pub(crate) trait BlockOps {
    fn coupling_value(&self, block: Block, u: &Mat, other: &Mat) -> f64;
    fn block_grad(&self, block: Block, u: &Mat, other: &Mat) -> Mat;
    fn block_prox(&self, block: Block, v: &Mat, tau: f64) -> Mat;
    fn block_subdiff_dist(&self, block: Block, u: &Mat, subgrad: &Mat) -> Option<f64>;
    fn block_lipschitz(&self, block: Block, other: &Mat) -> Result<f64>;
    fn block_exact_prox(&self, block: Block, anchor: &Mat, other: &Mat, zeta: f64) -> Option<Mat>;}

impl<P: BlockProblem + ?Sized> BlockOps for P {
    fn coupling_value(&self, block: Block, u: &Mat, other: &Mat) -> f64 {
        match block {
            Block::X => self.h_value(u, other),
            Block::Y => self.h_value(other, u),
        }
    }

    fn block_grad(&self, block: Block, u: &Mat, other: &Mat) -> Mat {
        match block {
            Block::X => self.h_grad_x(u, other),
            Block::Y => self.h_grad_y(other, u),
        }
    }

    fn block_prox(&self, block: Block, v: &Mat, tau: f64) -> Mat {
        match block {
            Block::X => self.prox_f(v, tau),
            Block::Y => self.prox_g(v, tau),
        }
    }

    fn block_subdiff_dist(&self, block: Block, u: &Mat, subgrad: &Mat) -> Option<f64> {
        match block {
            Block::X => self.f_subdiff_dist(u, subgrad),
            Block::Y => self.g_subdiff_dist(u, subgrad),
        }
    }

    fn block_lipschitz(&self, block: Block, other: &Mat) -> Result<f64> {
        match block {
            Block::X => self.lipschitz_x(other),
            Block::Y => self.lipschitz_y(other),
        }
    }

    fn block_exact_prox(&self, block: Block, anchor: &Mat, other: &Mat, zeta: f64) -> Option<Mat> {
        match block {
            Block::X => self.exact_prox_x(anchor, other, zeta),
            Block::Y => self.exact_prox_y(anchor, other, zeta),
        }
    }
}

pub(crate) fn check_shape(what: &str, expected: Shape, got: &Mat) -> Result<()> {
    if Shape::of(got) != expected {
        return Err(TecuError::invalid(format!(
            "{what}: expected shape {expected}, got {}",
            Shape::of(got)
        )));
    }
    Ok(())
}

/// `Ψ(x, y) = f(x) + g(y) + H(x, y)`, `+∞` when either block leaves its
/// indicator domain.
pub fn evaluate_objective(problem: &dyn BlockProblem, x: &Mat, y: &Mat) -> Result<f64> {
    check_shape("x block", problem.x_shape(), x)?;
    check_shape("y block", problem.y_shape(), y)?;
    let f = problem.f_value(x);
    let g = problem.g_value(y);
    if f == f64::INFINITY || g == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(f + g + problem.h_value(x, y))
}
