use crate::error::{Result, TecuError};
use crate::problem::{BlockOps, BlockProblem, Mat, Subproblem};
use crate::update::{EmbeddedOperator, LIPSCHITZ_FLOOR};

/// Task-agnostic inner solver: one proximal-gradient step on the full block
/// subproblem `h(u) + H(u, ·) + (η/2)‖u − anchor‖²` with step `1/(σ(L + η))`.
#[derive(Debug, Clone)]
pub struct ProxGradientOperator {
    safety: f64,
    gamma: Option<f64>,
}

impl ProxGradientOperator {
    pub fn new(safety: f64) -> Self {
        ProxGradientOperator { safety, gamma: None }
    }
}

impl Default for ProxGradientOperator {
    fn default() -> Self {
        ProxGradientOperator::new(1.1)
    }
}

impl EmbeddedOperator for ProxGradientOperator {
    fn name(&self) -> &str {
        "prox_gradient"
    }

    fn reset(&mut self, problem: &dyn BlockProblem, sub: &Subproblem<'_>, eta: f64) -> Result<()> {
        if !(self.safety >= 1.0) {
            return Err(TecuError::invalid("prox-gradient operator: safety must be at least 1"));
        }
        let l = problem.block_lipschitz(sub.block, sub.frozen)?.max(LIPSCHITZ_FLOOR);
        self.gamma = Some(self.safety * (l + eta));
        Ok(())
    }

    fn step(&mut self, problem: &dyn BlockProblem, current: &Mat, sub: &Subproblem<'_>, eta: f64) -> Result<Mat> {
        let gamma = self
            .gamma
            .ok_or_else(|| TecuError::InvariantViolation("prox-gradient operator stepped before reset".into()))?;
        let grad = problem.block_grad(sub.block, current, sub.frozen) + (current - sub.anchor) * eta;
        Ok(problem.block_prox(sub.block, &(current - grad / gamma), gamma))
    }

    fn box_clone(&self) -> Box<dyn EmbeddedOperator> {
        Box::new(ProxGradientOperator::new(self.safety))
    }
}
