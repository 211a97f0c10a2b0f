//! Reference solvers (PALM, iPALM, BCU, INV) over the same oracles and
//! trace format as the engine.

use serde::{Deserialize, Serialize};

use crate::engine::{drive, RunOptions, SolveResult};
use crate::error::{Result, TecuError};
use crate::operators::sphere_project;
use crate::problem::{AppliedUpdate, BlockOps, BlockProblem, IterateState, Mat, Subproblem};
use crate::tasks::DlProblem;
use crate::update::{
    error_estimate, linearized_prox, lipschitz_for, prox_linear_step, BlockOutcome, DEFAULT_SAFETY,
};

pub const IPALM_DEFAULT_BETA: f64 = 0.3;
pub const BCU_DEFAULT_BETA: f64 = 0.5;

/// Extrapolation `û = u^t + β(u^t − u^{t−1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertialConfig {
    pub beta: f64,
}

impl InertialConfig {
    pub fn new(beta: f64) -> Result<Self> {
        let cfg = InertialConfig { beta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(TecuError::invalid(format!("inertial beta must lie in [0, 1), got {}", self.beta)));
        }
        Ok(())
    }
}

fn extrapolate(cur: &Mat, prev: &Mat, beta: f64) -> Mat {
    if beta == 0.0 {
        cur.clone()
    } else {
        cur + (cur - prev) * beta
    }
}

fn prox_linear_outcome(problem: &dyn BlockProblem, sub: &Subproblem<'_>, safety: f64) -> Result<BlockOutcome> {
    let lipschitz = lipschitz_for(problem, sub)?;
    Ok(BlockOutcome {
        iterate: prox_linear_step(problem, sub, lipschitz, safety)?,
        err_norm: 0.0,
        inner_steps: 1,
        applied: AppliedUpdate::ProxLinear {
            gamma: safety * lipschitz,
            lipschitz,
        },
        raw_candidate: None,
    })
}

/// Where the extrapolated point enters the prox-linear step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Inertia {
    /// Gradient and prox anchor both at `û` (iPALM).
    Full,
    /// Gradient at `û`, prox anchored at `u^t` (BCU).
    GradientOnly,
}

fn inertial_outcome(
    problem: &dyn BlockProblem,
    sub: &Subproblem<'_>,
    prev: &Mat,
    beta: f64,
    safety: f64,
    mode: Inertia,
) -> Result<BlockOutcome> {
    if beta == 0.0 {
        return prox_linear_outcome(problem, sub, safety);
    }
    let lipschitz = lipschitz_for(problem, sub)?;
    let gamma = safety * lipschitz;
    let hat = extrapolate(sub.anchor, prev, beta);
    let iterate = match mode {
        Inertia::Full => {
            let hat_sub = Subproblem { anchor: &hat, ..*sub };
            linearized_prox(problem, &hat_sub, gamma)
        }
        Inertia::GradientOnly => {
            let grad = problem.block_grad(sub.block, &hat, sub.frozen);
            let v = sub.anchor - grad / gamma;
            problem.block_prox(sub.block, &v, gamma)
        }
    };
    Ok(BlockOutcome {
        iterate,
        err_norm: 0.0,
        inner_steps: 1,
        applied: AppliedUpdate::ProxLinear { gamma, lipschitz },
        raw_candidate: None,
    })
}

/// One PALM iteration: prox-linear on x, then on y.
pub fn palm_iterate(problem: &dyn BlockProblem, state: &IterateState) -> Result<(Mat, Mat)> {
    let (ox, oy) = palm_outcomes(problem, state, DEFAULT_SAFETY)?;
    Ok((ox.iterate, oy.iterate))
}

fn palm_outcomes(problem: &dyn BlockProblem, state: &IterateState, safety: f64) -> Result<(BlockOutcome, BlockOutcome)> {
    let ox = prox_linear_outcome(problem, &state.x_subproblem(), safety)?;
    let oy = prox_linear_outcome(problem, &state.y_subproblem(&ox.iterate), safety)?;
    Ok((ox, oy))
}

fn inertial_outcomes(
    problem: &dyn BlockProblem,
    state: &IterateState,
    inertial: InertialConfig,
    safety: f64,
    mode: Inertia,
) -> Result<(BlockOutcome, BlockOutcome)> {
    inertial.validate()?;
    let ox = inertial_outcome(problem, &state.x_subproblem(), &state.x_prev, inertial.beta, safety, mode)?;
    let oy = inertial_outcome(
        problem,
        &state.y_subproblem(&ox.iterate),
        &state.y_prev,
        inertial.beta,
        safety,
        mode,
    )?;
    Ok((ox, oy))
}

/// One iPALM iteration: extrapolate each block, then prox-linear at the
/// extrapolated point.
pub fn ipalm_iterate(problem: &dyn BlockProblem, state: &IterateState, inertial: InertialConfig) -> Result<(Mat, Mat)> {
    let (ox, oy) = inertial_outcomes(problem, state, inertial, DEFAULT_SAFETY, Inertia::Full)?;
    Ok((ox.iterate, oy.iterate))
}

/// One BCU iteration: gradient at the extrapolated point, prox anchored at
/// the current iterate.
pub fn bcu_iterate(problem: &dyn BlockProblem, state: &IterateState, inertial: InertialConfig) -> Result<(Mat, Mat)> {
    let (ox, oy) = inertial_outcomes(problem, state, inertial, DEFAULT_SAFETY, Inertia::GradientOnly)?;
    Ok((ox.iterate, oy.iterate))
}

/// Solves `min_D ½‖Y − DWᵀ‖² + (η/2)‖D − D_cur‖²` without the unit-norm
/// constraint, then projects: `D = (YW + ηD_cur)(WᵀW + ηI)⁻¹`.
pub fn inv_d_update(d_cur: &Mat, w: &Mat, y: &Mat, eta: f64) -> Result<Mat> {
    if !(eta >= 0.0) {
        return Err(TecuError::invalid(format!("INV: eta must be non-negative, got {eta}")));
    }
    if y.nrows() != d_cur.nrows() || w.ncols() != d_cur.ncols() || w.nrows() != y.ncols() {
        return Err(TecuError::invalid("INV: inconsistent D/W/Y shapes"));
    }
    let mut gram = w.transpose() * w;
    for i in 0..gram.nrows() {
        gram[(i, i)] += eta;
    }
    let rhs = y * w + d_cur * eta;
    let d = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs.transpose()).transpose(),
        // η = 0 with rank-deficient W: least-squares via pseudo-inverse.
        None => {
            let pinv = gram
                .pseudo_inverse(1e-12)
                .map_err(|e| TecuError::NumericalFailure(format!("INV: {e}")))?;
            rhs * pinv
        }
    };
    Ok(sphere_project(&d))
}

/// Baseline solver and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Baseline {
    Palm { safety: f64 },
    Ipalm { beta: f64, safety: f64 },
    Bcu { beta: f64, safety: f64 },
    /// Dictionary learning only: prox-linear W, inverse-then-project D.
    Inv { eta: f64, safety: f64 },
}

impl Baseline {
    pub fn palm() -> Self {
        Baseline::Palm { safety: DEFAULT_SAFETY }
    }

    pub fn ipalm() -> Self {
        Baseline::Ipalm {
            beta: IPALM_DEFAULT_BETA,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn bcu() -> Self {
        Baseline::Bcu {
            beta: BCU_DEFAULT_BETA,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn inv() -> Self {
        Baseline::Inv {
            eta: 1.0,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Baseline::Palm { .. } => "PALM",
            Baseline::Ipalm { .. } => "iPALM",
            Baseline::Bcu { .. } => "BCU",
            Baseline::Inv { .. } => "INV",
        }
    }

    fn safety(&self) -> f64 {
        match *self {
            Baseline::Palm { safety }
            | Baseline::Ipalm { safety, .. }
            | Baseline::Bcu { safety, .. }
            | Baseline::Inv { safety, .. } => safety,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety() > 1.0) {
            return Err(TecuError::invalid(format!("{}: safety must exceed 1", self.label())));
        }
        match *self {
            Baseline::Ipalm { beta, .. } | Baseline::Bcu { beta, .. } => InertialConfig { beta }.validate(),
            Baseline::Inv { eta, .. } if !(eta >= 0.0) => Err(TecuError::invalid("INV: eta must be non-negative")),
            _ => Ok(()),
        }
    }
}

/// Runs PALM, iPALM or BCU. INV needs the dictionary structure; see
/// [`run_inv`].
pub fn run_baseline(
    problem: &dyn BlockProblem,
    baseline: Baseline,
    opts: &RunOptions,
    init_x: Mat,
    init_y: Mat,
) -> Result<SolveResult> {
    baseline.validate()?;
    let safety = baseline.safety();
    let label = baseline.label().to_string();
    match baseline {
        // Classical PALM carries the standard descent certificate.
        Baseline::Palm { .. } => drive(problem, init_x, init_y, opts, label, (0.0, 0.0), true, |st| {
            palm_outcomes(problem, st, safety)
        }),
        Baseline::Ipalm { beta, .. } => drive(problem, init_x, init_y, opts, label, (0.0, 0.0), false, |st| {
            inertial_outcomes(problem, st, InertialConfig { beta }, safety, Inertia::Full)
        }),
        Baseline::Bcu { beta, .. } => drive(problem, init_x, init_y, opts, label, (0.0, 0.0), false, |st| {
            inertial_outcomes(problem, st, InertialConfig { beta }, safety, Inertia::GradientOnly)
        }),
        Baseline::Inv { .. } => Err(TecuError::UnsupportedUpdate(
            "INV runs on dictionary learning problems only".into(),
        )),
    }
}

/// INV on dictionary learning. The logged `err_norm_y` is the residual of
/// the inexact D-update measured by [`error_estimate`]; the accepted D is
/// the projected inverse itself.
pub fn run_inv(problem: &DlProblem, eta: f64, safety: f64, opts: &RunOptions, init_x: Mat, init_y: Mat) -> Result<SolveResult> {
    Baseline::Inv { eta, safety }.validate()?;
    let data = problem.data_arc();
    drive(problem, init_x, init_y, opts, "INV".into(), (0.0, 0.0), false, |st| {
        let ox = prox_linear_outcome(problem, &st.x_subproblem(), safety)?;
        let sub = st.y_subproblem(&ox.iterate);
        let d = inv_d_update(sub.anchor, &ox.iterate, &data, eta)?;
        let est = error_estimate(problem, &sub, &d, eta);
        let oy = BlockOutcome {
            iterate: d.clone(),
            err_norm: est.e_norm,
            inner_steps: 1,
            applied: AppliedUpdate::Heuristic,
            raw_candidate: Some(d),
        };
        Ok((ox, oy))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_with_zero_codes_projects_anchor() {
        let d = Mat::from_column_slice(2, 2, &[3.0, 4.0, 0.0, 2.0]);
        let out = inv_d_update(&d, &Mat::zeros(5, 2), &Mat::from_element(2, 5, 1.0), 1.0).unwrap();
        assert!((&out - sphere_project(&d)).norm() < 1e-15);
    }

    #[test]
    fn beta_range() {
        assert!(InertialConfig::new(1.0).is_err());
        assert!(InertialConfig::new(-0.1).is_err());
        assert!(InertialConfig::new(0.0).is_ok());
    }
}
