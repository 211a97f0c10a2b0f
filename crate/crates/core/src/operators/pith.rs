//! Proximal iterative hard thresholding on the code subproblem
//! `min_W λ‖W‖₀ + ½‖Y − DWᵀ‖² + (η/2)‖W − W_anchor‖²`.

use std::sync::Arc;

use super::prox::hard_threshold;
use crate::error::{Result, TecuError};
use crate::problem::{BlockProblem, Mat, Subproblem};
use crate::update::{gram_spectral_bound, EmbeddedOperator};

/// Step-size choice for PITH, validated against `τ < 1/(‖DᵀD‖₂ + η)`.
#[derive(Debug, Clone, Copy)]
pub struct PithConfig {
    pub step_size: f64,
    /// `1/(L_inner + η)` at validation time.
    max_step: f64,
}

impl PithConfig {
    /// Default `τ = 0.9/(L_inner + η)`.
    pub fn for_subproblem(d: &Mat, eta: f64) -> Result<Self> {
        let l_inner = gram_spectral_bound(d)?;
        let max_step = 1.0 / (l_inner + eta);
        Ok(PithConfig {
            step_size: 0.9 * max_step,
            max_step,
        })
    }

    pub fn with_step(step_size: f64, d: &Mat, eta: f64) -> Result<Self> {
        let l_inner = gram_spectral_bound(d)?;
        let max_step = 1.0 / (l_inner + eta);
        if !(step_size > 0.0 && step_size < max_step) {
            return Err(TecuError::invalid(format!(
                "PITH step size {step_size} must lie in (0, {max_step})"
            )));
        }
        Ok(PithConfig { step_size, max_step })
    }
}

/// One IHT pass: gradient step on the smooth part, then hard thresholding
/// at weight `1/τ`.
pub fn pith_w_step(
    w_cur: &Mat,
    d: &Mat,
    y: &Mat,
    w_anchor: &Mat,
    eta: f64,
    lambda: f64,
    config: &PithConfig,
) -> Result<Mat> {
    let tau = config.step_size;
    if !(tau > 0.0 && tau < config.max_step) {
        return Err(TecuError::invalid(format!("PITH step size {tau} violates τ < 1/(L + η)")));
    }
    let grad = (w_cur * d.transpose() - y.transpose()) * d + (w_cur - w_anchor) * eta;
    Ok(hard_threshold(&(w_cur - grad * tau), lambda, 1.0 / tau))
}

/// [`EmbeddedOperator`] applying [`pith_w_step`] on the code block; the
/// frozen block is the dictionary.
#[derive(Debug, Clone)]
pub struct PithOperator {
    data: Arc<Mat>,
    lambda: f64,
    config: Option<PithConfig>,
}

impl PithOperator {
    pub fn new(data: Arc<Mat>, lambda: f64) -> Self {
        PithOperator {
            data,
            lambda,
            config: None,
        }
    }
}

impl EmbeddedOperator for PithOperator {
    fn name(&self) -> &str {
        "pith"
    }

    fn reset(&mut self, _problem: &dyn BlockProblem, sub: &Subproblem<'_>, eta: f64) -> Result<()> {
        self.config = Some(PithConfig::for_subproblem(sub.frozen, eta)?);
        Ok(())
    }

    fn step(&mut self, _problem: &dyn BlockProblem, current: &Mat, sub: &Subproblem<'_>, eta: f64) -> Result<Mat> {
        let config = self
            .config
            .ok_or_else(|| TecuError::InvariantViolation("PITH operator stepped before reset".into()))?;
        pith_w_step(current, sub.frozen, &self.data, sub.anchor, eta, self.lambda, &config)
    }

    fn box_clone(&self) -> Box<dyn EmbeddedOperator> {
        Box::new(PithOperator::new(self.data.clone(), self.lambda))
    }
}
