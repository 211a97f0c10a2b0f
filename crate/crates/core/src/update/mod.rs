//! Block update mechanisms: exact proximal, prox-linear, and task-embedded
//! updates governed by a relative error criterion.

mod lipschitz;

use std::fmt;

use crate::error::{Result, TecuError};
use crate::problem::{AppliedUpdate, Block, BlockOps, BlockProblem, Mat, Subproblem};

pub use lipschitz::{estimate_partial_lipschitz, gram_spectral_bound, power_iteration, LIPSCHITZ_INFLATION};

/// Default `γ/L` ratio for prox-linear steps.
pub const DEFAULT_SAFETY: f64 = 1.1;
/// Default inner propagation budget for embedded updates.
pub const DEFAULT_K_MAX: usize = 20;

/// One propagation step `𝒜ᵤⁱ` of a task-embedded inner solver.
///
/// The operator may keep per-subproblem state (multipliers, cached
/// factorizations); [`EmbeddedOperator::reset`] is called once per outer
/// iteration before the first step.
pub trait EmbeddedOperator: Send {
    fn name(&self) -> &str;

    fn reset(&mut self, _problem: &dyn BlockProblem, _sub: &Subproblem<'_>, _eta: f64) -> Result<()> {
        Ok(())
    }

    /// Apply one propagation to `current`.
    fn step(&mut self, problem: &dyn BlockProblem, current: &Mat, sub: &Subproblem<'_>, eta: f64) -> Result<Mat>;

    fn box_clone(&self) -> Box<dyn EmbeddedOperator>;
}

impl Clone for Box<dyn EmbeddedOperator> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

impl fmt::Debug for dyn EmbeddedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EmbeddedOperator({})", self.name())
    }
}

/// Parameters of a task-embedded update.
#[derive(Debug, Clone)]
pub struct EmbeddedRule {
    pub operator: Box<dyn EmbeddedOperator>,
    /// Error constant `C` in `‖e‖ ≤ C·ε`.
    pub c: f64,
    /// Proximal weight `η` of the block subproblem; must exceed `2C`.
    pub eta: f64,
    pub k_max: usize,
    /// Evaluate the error estimate every `check_every` inner steps.
    pub check_every: usize,
    /// `γ/L` ratio of the prox-linear fallback.
    pub fallback_safety: f64,
}

impl EmbeddedRule {
    pub fn new(operator: Box<dyn EmbeddedOperator>, c: f64, eta: f64) -> Self {
        EmbeddedRule {
            operator,
            c,
            eta,
            k_max: DEFAULT_K_MAX,
            check_every: 1,
            fallback_safety: DEFAULT_SAFETY,
        }
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_check_every(mut self, check_every: usize) -> Self {
        self.check_every = check_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(TecuError::invalid(format!("embedded rule: C must be positive, got {}", self.c)));
        }
        if !(self.eta > 2.0 * self.c) {
            return Err(TecuError::invalid(format!(
                "embedded rule: need 0 < 2C < eta, got C = {}, eta = {}",
                self.c, self.eta
            )));
        }
        if self.k_max == 0 || self.check_every == 0 {
            return Err(TecuError::invalid("embedded rule: k_max and check_every must be at least 1"));
        }
        if !(self.fallback_safety > 1.0) {
            return Err(TecuError::invalid("embedded rule: fallback safety must exceed 1"));
        }
        Ok(())
    }
}

/// Per-block update choice.
#[derive(Debug, Clone)]
pub enum UpdateRule {
    /// Exact proximal step with weight `zeta > 0`.
    Proximal { zeta: f64 },
    /// Linearized step with `γ = safety·L`, `safety > 1`.
    ProxLinear { safety: f64 },
    Embedded(EmbeddedRule),
}

impl UpdateRule {
    pub fn prox_linear() -> Self {
        UpdateRule::ProxLinear { safety: DEFAULT_SAFETY }
    }

    /// Numeric code of the rule within its block: 1–3 for x, 4–6 for y.
    pub fn code(&self, block: Block) -> u8 {
        let base = match self {
            UpdateRule::Proximal { .. } => 1,
            UpdateRule::ProxLinear { .. } => 2,
            UpdateRule::Embedded(_) => 3,
        };
        match block {
            Block::X => base,
            Block::Y => base + 3,
        }
    }

    pub fn is_embedded(&self) -> bool {
        matches!(self, UpdateRule::Embedded(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UpdateRule::Proximal { zeta } if !(*zeta > 0.0) => {
                Err(TecuError::invalid(format!("proximal rule: zeta must be positive, got {zeta}")))
            }
            UpdateRule::ProxLinear { safety } if !(*safety > 1.0) => {
                Err(TecuError::invalid(format!("prox-linear rule: safety must exceed 1, got {safety}")))
            }
            UpdateRule::Embedded(rule) => rule.validate(),
            _ => Ok(()),
        }
    }
}

/// Prop.-1 style error estimate for an inexact block iterate.
#[derive(Debug, Clone)]
pub struct ErrorEstimate {
    /// Intermediate variable `ũ`, the iterate actually accepted.
    pub tilde_u: Mat,
    /// Residual `e` of the first-order condition at `ũ`.
    pub e: Mat,
    pub e_norm: f64,
}

impl ErrorEstimate {
    pub(crate) fn exact(u: Mat) -> Self {
        let e = Mat::zeros(u.nrows(), u.ncols());
        ErrorEstimate {
            tilde_u: u,
            e,
            e_norm: 0.0,
        }
    }
}

/// Result of one block update.
#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub iterate: Mat,
    pub err_norm: f64,
    pub inner_steps: usize,
    pub applied: AppliedUpdate,
    /// Raw inner-solver output `u^{t,K}` for embedded updates.
    pub raw_candidate: Option<Mat>,
}

/// `‖e‖ ≤ C·ε`; vacuous when `ε = +∞`.
pub fn criterion_check(e_norm: f64, c: f64, eps: f64) -> bool {
    eps == f64::INFINITY || e_norm <= c * eps
}

/// Exact proximal update using the solver registered on the problem.
pub fn proximal_step(problem: &dyn BlockProblem, sub: &Subproblem<'_>, zeta: f64) -> Result<Mat> {
    if !(zeta > 0.0) {
        return Err(TecuError::invalid(format!("proximal step: zeta must be positive, got {zeta}")));
    }
    problem
        .block_exact_prox(sub.block, sub.anchor, sub.frozen, zeta)
        .ok_or_else(|| {
            TecuError::UnsupportedUpdate(format!(
                "no exact proximal solver registered for block {}",
                sub.block.name()
            ))
        })
}

/// `prox_h^γ(u − ∇H(u)/γ)` with `γ = safety·lipschitz`.
pub fn prox_linear_step(
    problem: &dyn BlockProblem,
    sub: &Subproblem<'_>,
    lipschitz: f64,
    safety: f64,
) -> Result<Mat> {
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(TecuError::invalid(format!(
            "prox-linear step: Lipschitz estimate must be positive, got {lipschitz}"
        )));
    }
    if !(safety > 1.0) {
        return Err(TecuError::invalid(format!("prox-linear step: safety must exceed 1, got {safety}")));
    }
    Ok(linearized_prox(problem, sub, safety * lipschitz))
}

/// `prox_h^γ(u − ∇H(u)/γ)` at the anchor.
pub(crate) fn linearized_prox(problem: &dyn BlockProblem, sub: &Subproblem<'_>, gamma: f64) -> Mat {
    let grad = problem.block_grad(sub.block, sub.anchor, sub.frozen);
    let v = sub.anchor - grad / gamma;
    problem.block_prox(sub.block, &v, gamma)
}

/// Floor applied to Lipschitz estimates so a vanishing coupling still
/// yields a valid step weight.
pub(crate) const LIPSCHITZ_FLOOR: f64 = 1e-12;

pub(crate) fn lipschitz_for(problem: &dyn BlockProblem, sub: &Subproblem<'_>) -> Result<f64> {
    Ok(problem.block_lipschitz(sub.block, sub.frozen)?.max(LIPSCHITZ_FLOOR))
}

/// `𝒫(u) = (1 − η)u − ∇H(u)` with the other block frozen.
fn linear_map(problem: &dyn BlockProblem, sub: &Subproblem<'_>, u: &Mat, eta: f64) -> Mat {
    u * (1.0 - eta) - problem.block_grad(sub.block, u, sub.frozen)
}

/// Computes `ũ = prox¹(η·u^{t−1} + 𝒫(candidate))` and
/// `e = 𝒫(candidate) − 𝒫(ũ)`.
///
/// `(ũ, e)` satisfy `e ∈ ∂h(ũ) + ∇H(ũ) + η(ũ − u^{t−1})`.
pub fn error_estimate(problem: &dyn BlockProblem, sub: &Subproblem<'_>, candidate: &Mat, eta: f64) -> ErrorEstimate {
    let p_cand = linear_map(problem, sub, candidate, eta);
    let point = sub.anchor * eta + &p_cand;
    let tilde_u = problem.block_prox(sub.block, &point, 1.0);
    let p_tilde = linear_map(problem, sub, &tilde_u, eta);
    let e = p_cand - p_tilde;
    let e_norm = e.norm();
    ErrorEstimate { tilde_u, e, e_norm }
}

/// Outcome of [`embedded_update`].
#[derive(Debug, Clone)]
pub struct EmbeddedOutcome {
    pub iterate: Mat,
    pub estimate: ErrorEstimate,
    /// Last inner-solver output before the error estimate.
    pub raw_candidate: Mat,
    /// Operator applications (plus one if the fallback ran).
    pub inner_steps: usize,
    pub fallback: Option<FallbackInfo>,
}

#[derive(Debug, Clone, Copy)]
pub struct FallbackInfo {
    pub gamma: f64,
    pub lipschitz: f64,
}

/// Runs the inner solver from `u^{t−1}` until the error criterion holds or
/// `k_max` propagations are spent, then falls back to one prox-linear step.
pub fn embedded_update(
    problem: &dyn BlockProblem,
    sub: &Subproblem<'_>,
    rule: &mut EmbeddedRule,
) -> Result<EmbeddedOutcome> {
    rule.validate()?;
    rule.operator.reset(problem, sub, rule.eta)?;
    let mut current = sub.anchor.clone();
    for i in 1..=rule.k_max {
        current = rule.operator.step(problem, &current, sub, rule.eta)?;
        if i % rule.check_every != 0 && i != rule.k_max {
            continue;
        }
        let estimate = error_estimate(problem, sub, &current, rule.eta);
        if criterion_check(estimate.e_norm, rule.c, sub.eps) {
            return Ok(EmbeddedOutcome {
                iterate: estimate.tilde_u.clone(),
                estimate,
                raw_candidate: current,
                inner_steps: i,
                fallback: None,
            });
        }
    }

    // Linearize H only; the proximal term is kept exact, so the step weight
    // on the full subproblem is σL + η.
    let lipschitz = lipschitz_for(problem, sub)?;
    let gamma = rule.fallback_safety * lipschitz + rule.eta;
    let iterate = linearized_prox(problem, sub, gamma);
    Ok(EmbeddedOutcome {
        estimate: ErrorEstimate::exact(iterate.clone()),
        iterate,
        raw_candidate: current,
        inner_steps: rule.k_max + 1,
        fallback: Some(FallbackInfo { gamma, lipschitz }),
    })
}

/// Applies `rule` to the block subproblem `sub`.
pub fn apply_rule(problem: &dyn BlockProblem, sub: &Subproblem<'_>, rule: &mut UpdateRule) -> Result<BlockOutcome> {
    match rule {
        UpdateRule::Proximal { zeta } => Ok(BlockOutcome {
            iterate: proximal_step(problem, sub, *zeta)?,
            err_norm: 0.0,
            inner_steps: 1,
            applied: AppliedUpdate::Proximal { zeta: *zeta },
            raw_candidate: None,
        }),
        UpdateRule::ProxLinear { safety } => {
            let lipschitz = lipschitz_for(problem, sub)?;
            Ok(BlockOutcome {
                iterate: prox_linear_step(problem, sub, lipschitz, *safety)?,
                err_norm: 0.0,
                inner_steps: 1,
                applied: AppliedUpdate::ProxLinear {
                    gamma: *safety * lipschitz,
                    lipschitz,
                },
                raw_candidate: None,
            })
        }
        UpdateRule::Embedded(rule) => {
            let out = embedded_update(problem, sub, rule)?;
            let applied = match out.fallback {
                None => AppliedUpdate::Embedded {
                    c: rule.c,
                    eta: rule.eta,
                },
                Some(fb) => AppliedUpdate::Fallback {
                    gamma: fb.gamma,
                    lipschitz: fb.lipschitz,
                    c: rule.c,
                    eta: rule.eta,
                },
            };
            Ok(BlockOutcome {
                iterate: out.iterate,
                err_norm: out.estimate.e_norm,
                inner_steps: out.inner_steps,
                applied,
                raw_candidate: Some(out.raw_candidate),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criterion_examples() {
        assert!(criterion_check(0.1, 0.4, 1.0));
        assert!(!criterion_check(0.5, 0.4, 1.0));
        assert!(criterion_check(1e300, 0.4, f64::INFINITY));
        assert!(criterion_check(0.4, 0.4, 1.0));
    }

    #[test]
    fn rule_codes() {
        assert_eq!(UpdateRule::Proximal { zeta: 1.0 }.code(Block::X), 1);
        assert_eq!(UpdateRule::prox_linear().code(Block::Y), 5);
        assert!(UpdateRule::Proximal { zeta: 0.0 }.validate().is_err());
        assert!(UpdateRule::ProxLinear { safety: 1.0 }.validate().is_err());
    }
}
