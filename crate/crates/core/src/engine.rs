//! Cyclic two-block outer loop, stopping rule and Lyapunov diagnostics.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Result, TecuError};
use crate::problem::{evaluate_objective, AppliedUpdate, Block, BlockProblem, IterateState, Mat, TraceRecord};
use crate::update::{apply_rule, BlockOutcome, UpdateRule};

/// Guard for relative-change denominators.
pub const REL_CHANGE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Run the post-hoc sufficient-descent check on the finished trace.
    pub phi_monitoring: bool,
    /// Relative slack `s` in `ΔΦ ≥ a‖Δz‖² − s(1 + |Φ|)`.
    pub descent_slack: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            phi_monitoring: true,
            descent_slack: 1e-8,
        }
    }
}

/// Loop controls shared by the engine and the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    pub max_outer: usize,
    pub stop_tol: f64,
    pub diagnostics: Diagnostics,
    /// Keep every accepted iterate (and raw inner-solver output) in the result.
    pub record_iterates: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_outer: 500,
            stop_tol: 1e-4,
            diagnostics: Diagnostics::default(),
            record_iterates: false,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return Err(TecuError::invalid("max_outer must be at least 1"));
        }
        if !(self.stop_tol > 0.0) {
            return Err(TecuError::invalid(format!("stop_tol must be positive, got {}", self.stop_tol)));
        }
        if !(self.diagnostics.descent_slack >= 0.0) {
            return Err(TecuError::invalid("descent_slack must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rule_x: UpdateRule,
    pub rule_y: UpdateRule,
    pub run: RunOptions,
    /// Seed for randomized initialization by callers; the loop itself is
    /// deterministic.
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(rule_x: UpdateRule, rule_y: UpdateRule) -> Self {
        SolverConfig {
            rule_x,
            rule_y,
            run: RunOptions::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule_x.validate()?;
        self.rule_y.validate()?;
        self.run.validate()
    }

    pub fn combination(&self) -> Combination {
        Combination::of(&self.rule_x, &self.rule_y)
    }
}

/// Pair of rule codes: 1–3 for x (proximal, prox-linear, embedded) and
/// 4–6 for y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Combination {
    pub x: u8,
    pub y: u8,
}

impl Combination {
    pub fn of(rule_x: &UpdateRule, rule_y: &UpdateRule) -> Self {
        Combination {
            x: rule_x.code(Block::X),
            y: rule_y.code(Block::Y),
        }
    }

    /// Accepts `"x-y"` codes and the classical names `PALM` (2-5) and
    /// `PAM` (1-4).
    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "PALM" => return Ok(Combination { x: 2, y: 5 }),
            "PAM" => return Ok(Combination { x: 1, y: 4 }),
            _ => {}
        }
        let bad = || TecuError::invalid(format!("unknown combination '{label}'"));
        let (a, b) = label.split_once('-').ok_or_else(bad)?;
        let x: u8 = a.trim().parse().map_err(|_| bad())?;
        let y: u8 = b.trim().parse().map_err(|_| bad())?;
        if !(1..=3).contains(&x) || !(4..=6).contains(&y) {
            return Err(bad());
        }
        Ok(Combination { x, y })
    }

    pub fn has_embedded(&self) -> bool {
        self.x == 3 || self.y == 6
    }

    /// `"x-y"` when any block is embedded; otherwise the classical name.
    pub fn label(&self) -> String {
        match (self.x, self.y) {
            (2, 5) => "PALM".to_string(),
            (1, 4) => "PAM".to_string(),
            (x, y) => format!("{x}-{y}"),
        }
    }

    /// Weights `(C_x²/η₁, C_y²/η₂)` of the Lyapunov correction terms; a
    /// block carries a term only when its rule is embedded.
    pub fn correction_weights(&self, c_x: f64, c_y: f64, eta_1: f64, eta_2: f64) -> Result<(f64, f64)> {
        let weight = |on: bool, c: f64, eta: f64, name: &str| -> Result<f64> {
            if !on {
                return Ok(0.0);
            }
            if !(eta > 0.0) || !(c >= 0.0) {
                return Err(TecuError::invalid(format!("Lyapunov weight for {name}: need C ≥ 0 and eta > 0")));
            }
            Ok(c * c / eta)
        };
        Ok((weight(self.x == 3, c_x, eta_1, "x")?, weight(self.y == 6, c_y, eta_2, "y")?))
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

/// Iteration `t` with `Φ^t − Φ^{t+1}` below the required decrease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentViolation {
    pub iteration: usize,
    pub decrease: f64,
    pub required: f64,
}

/// Accepted iterate `z^t` plus the raw inner-solver outputs that produced it.
#[derive(Debug, Clone)]
pub struct IterateSnapshot {
    pub x: Mat,
    pub y: Mat,
    pub raw_x: Option<Mat>,
    pub raw_y: Option<Mat>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub final_x: Mat,
    pub final_y: Mat,
    pub trace: Vec<TraceRecord>,
    pub status: SolveStatus,
    pub combination_label: String,
    pub descent_violations: Vec<DescentViolation>,
    /// `z^0, z^1, …` when [`RunOptions::record_iterates`] is set.
    pub iterates: Vec<IterateSnapshot>,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn total_inner_steps(&self) -> usize {
        self.trace.iter().map(|r| r.inner_steps_x + r.inner_steps_y).sum()
    }

    pub fn wall_time_s(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.wall_time_s)
    }
}

/// `[‖Δx‖/‖x^t‖, ‖Δy‖/‖y^t‖, |ΔΨ|/|Ψ^t|]` after `state` has advanced to
/// `t + 1`, denominators floored at [`REL_CHANGE_FLOOR`].
pub fn relative_changes(state: &IterateState, psi_t: f64, psi_prev: f64) -> [f64; 3] {
    let rx = state.step_norm_x() / state.x_prev.norm().max(REL_CHANGE_FLOOR);
    let ry = state.step_norm_y() / state.y_prev.norm().max(REL_CHANGE_FLOOR);
    let ro = (psi_t - psi_prev).abs() / psi_prev.abs().max(REL_CHANGE_FLOOR);
    [rx, ry, ro]
}

/// True iff the largest relative change is below `tol`.
pub fn stopping_check(state: &IterateState, psi_t: f64, psi_prev: f64, tol: f64) -> bool {
    relative_changes(state, psi_t, psi_prev).into_iter().fold(0.0, f64::max) < tol
}

/// `Φ(z^t, z^{t−1}) = Ψ(z^t) + C_x²/η₁‖x^t − x^{t−1}‖² + C_y²/η₂‖y^t − y^{t−1}‖²`
/// with only the embedded blocks' terms present.
pub fn lyapunov_phi(
    psi: f64,
    state: &IterateState,
    combination: &str,
    c_x: f64,
    c_y: f64,
    eta_1: f64,
    eta_2: f64,
) -> Result<f64> {
    let combo = Combination::parse(combination)?;
    let (wx, wy) = combo.correction_weights(c_x, c_y, eta_1, eta_2)?;
    Ok(psi + wx * state.step_norm_x().powi(2) + wy * state.step_norm_y().powi(2))
}

/// Descent margin contributed by one block update.
pub fn block_margin(applied: &AppliedUpdate) -> Result<f64> {
    let margin = match *applied {
        AppliedUpdate::Proximal { zeta } => zeta / 2.0,
        AppliedUpdate::ProxLinear { gamma, lipschitz } => (gamma - lipschitz) / 2.0,
        AppliedUpdate::Embedded { c, eta } => eta / 4.0 - c * c / eta,
        AppliedUpdate::Fallback {
            gamma, lipschitz, c, eta,
        } => (gamma - lipschitz) / 2.0 - c * c / eta,
        AppliedUpdate::Heuristic => {
            return Err(TecuError::invalid("heuristic updates carry no descent margin"));
        }
    };
    Ok(margin)
}

/// Sufficient-descent constant `a` of a combination for one iteration's
/// applied updates; errors if it is not positive.
pub fn descent_margin_a(combination: &str, applied_x: &AppliedUpdate, applied_y: &AppliedUpdate) -> Result<f64> {
    let combo = Combination::parse(combination)?;
    check_kind(combo.x, applied_x, Block::X)?;
    check_kind(combo.y, applied_y, Block::Y)?;
    let a = block_margin(applied_x)?.min(block_margin(applied_y)?);
    if !(a > 0.0) {
        return Err(TecuError::invalid(format!(
            "descent constant for {combination} is not positive ({a}); parameter conditions violated"
        )));
    }
    Ok(a)
}

fn check_kind(code: u8, applied: &AppliedUpdate, block: Block) -> Result<()> {
    let base = if block == Block::X { code } else { code - 3 };
    let ok = matches!(
        (base, applied),
        (1, AppliedUpdate::Proximal { .. })
            | (2, AppliedUpdate::ProxLinear { .. })
            | (3, AppliedUpdate::Embedded { .. })
            | (3, AppliedUpdate::Fallback { .. })
    );
    if ok {
        Ok(())
    } else {
        Err(TecuError::invalid(format!(
            "block {} update {applied:?} does not match rule code {code}",
            block.name()
        )))
    }
}

/// Lists every `t ≥ 2` with
/// `Φ^t − Φ^{t+1} < a_t‖z^{t+1} − z^t‖² − slack·(1 + |Φ^t|)`, where `a_t`
/// is the running minimum of the per-iteration descent constant.
pub fn check_sufficient_descent(trace: &[TraceRecord], combination: &str, slack: f64) -> Result<Vec<DescentViolation>> {
    if trace.len() < 3 {
        return Err(TecuError::invalid(format!(
            "sufficient-descent check needs at least 3 trace records, got {}",
            trace.len()
        )));
    }
    let mut a = f64::INFINITY;
    let mut out = Vec::new();
    for (k, next) in trace.iter().enumerate().skip(1) {
        a = a.min(descent_margin_a(combination, &next.applied_x, &next.applied_y)?);
        let cur = &trace[k - 1];
        if cur.iteration < 2 {
            continue;
        }
        let decrease = cur.phi - next.phi;
        let step_sq = next.step_norm_x.powi(2) + next.step_norm_y.powi(2);
        let required = a * step_sq - slack * (1.0 + cur.phi.abs());
        if !(decrease >= required) {
            out.push(DescentViolation {
                iteration: cur.iteration,
                decrease,
                required,
            });
        }
    }
    Ok(out)
}

/// Lyapunov weights for a rule pair (zero for non-embedded blocks).
fn rule_weights(rule_x: &UpdateRule, rule_y: &UpdateRule) -> (f64, f64) {
    let w = |r: &UpdateRule| match r {
        UpdateRule::Embedded(e) => e.c * e.c / e.eta,
        _ => 0.0,
    };
    (w(rule_x), w(rule_y))
}

/// Shared outer loop. `step` maps `z^t` to both block outcomes.
pub(crate) fn drive<F>(
    problem: &dyn BlockProblem,
    init_x: Mat,
    init_y: Mat,
    opts: &RunOptions,
    label: String,
    weights: (f64, f64),
    certifiable: bool,
    mut step: F,
) -> Result<SolveResult>
where
    F: FnMut(&IterateState) -> Result<(BlockOutcome, BlockOutcome)>,
{
    opts.validate()?;
    let mut psi_prev = evaluate_objective(problem, &init_x, &init_y)?;
    if !psi_prev.is_finite() {
        return Err(TecuError::invalid("initial point is infeasible (objective is not finite)"));
    }
    let mut state = IterateState::new(init_x, init_y);
    let mut iterates = Vec::new();
    if opts.record_iterates {
        iterates.push(IterateSnapshot {
            x: state.x.clone(),
            y: state.y.clone(),
            raw_x: None,
            raw_y: None,
        });
    }
    let mut trace = Vec::with_capacity(opts.max_outer.min(4096));
    let mut status = SolveStatus::MaxIterations;
    let start = Instant::now();

    for _ in 0..opts.max_outer {
        let eps_x = state.next_eps_x();
        let eps_y = state.next_eps_y();
        let (ox, oy) = step(&state)?;
        let psi = evaluate_objective(problem, &ox.iterate, &oy.iterate)?;
        if !psi.is_finite() {
            return Err(TecuError::InvariantViolation(format!(
                "objective is not finite at accepted iterate {}",
                state.iteration + 1
            )));
        }
        if opts.record_iterates {
            iterates.push(IterateSnapshot {
                x: ox.iterate.clone(),
                y: oy.iterate.clone(),
                raw_x: ox.raw_candidate.clone(),
                raw_y: oy.raw_candidate.clone(),
            });
        }
        state.advance(ox.iterate, oy.iterate);
        let (sx, sy) = (state.step_norm_x(), state.step_norm_y());
        let [rx, ry, ro] = relative_changes(&state, psi, psi_prev);
        trace.push(TraceRecord {
            iteration: state.iteration,
            objective: psi,
            phi: psi + weights.0 * sx * sx + weights.1 * sy * sy,
            step_norm_x: sx,
            step_norm_y: sy,
            rel_change_x: rx,
            rel_change_y: ry,
            rel_change_obj: ro,
            err_norm_x: ox.err_norm,
            err_norm_y: oy.err_norm,
            eps_x,
            eps_y,
            inner_steps_x: ox.inner_steps,
            inner_steps_y: oy.inner_steps,
            applied_x: ox.applied,
            applied_y: oy.applied,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        if rx.max(ry).max(ro) < opts.stop_tol {
            status = SolveStatus::Converged;
            break;
        }
        psi_prev = psi;
    }

    let descent_violations = if certifiable && opts.diagnostics.phi_monitoring && trace.len() >= 3 {
        check_sufficient_descent(&trace, &label, opts.diagnostics.descent_slack)?
    } else {
        Vec::new()
    };
    Ok(SolveResult {
        final_x: state.x,
        final_y: state.y,
        trace,
        status,
        combination_label: label,
        descent_violations,
        iterates,
    })
}

/// Runs the cyclic scheme: each outer iteration updates x with `rule_x`
/// (y frozen), then y with `rule_y` (fresh x frozen).
pub fn solve(problem: &dyn BlockProblem, config: &SolverConfig, init_x: Mat, init_y: Mat) -> Result<SolveResult> {
    config.validate()?;
    let combo = config.combination();
    let weights = rule_weights(&config.rule_x, &config.rule_y);
    let mut rule_x = config.rule_x.clone();
    let mut rule_y = config.rule_y.clone();
    drive(problem, init_x, init_y, &config.run, combo.label(), weights, true, |state| {
        let ox = apply_rule(problem, &state.x_subproblem(), &mut rule_x)?;
        let oy = apply_rule(problem, &state.y_subproblem(&ox.iterate), &mut rule_y)?;
        Ok((ox, oy))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Shape;
    use crate::tasks::SeparableQuadratic;

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn labels() {
        let pl = UpdateRule::prox_linear();
        assert_eq!(Combination::of(&pl, &pl).label(), "PALM");
        assert_eq!(Combination::parse("2-6").unwrap(), Combination { x: 2, y: 6 });
        assert_eq!(Combination::parse("PALM").unwrap().label(), "PALM");
        assert!(Combination::parse("4-1").is_err());
        assert!(Combination::parse("TECU").is_err());
    }

    #[test]
    fn stopping_rule_takes_max() {
        let mut st = IterateState::new(scalar(1.0), scalar(1.0));
        st.advance(scalar(1.0), scalar(1.0));
        assert!(stopping_check(&st, 3.0, 3.0, 1e-12));
        let mut st = IterateState::new(scalar(1.0), scalar(1.0));
        st.advance(scalar(1.0 + 2e-4), scalar(1.0 + 5e-5));
        assert!(!stopping_check(&st, 1.0 + 5e-5, 1.0, 1e-4));
        let mut st = IterateState::new(scalar(1.0), scalar(1.0));
        st.advance(scalar(1.0 + 9e-5), scalar(1.0 + 9e-5));
        assert!(stopping_check(&st, 1.0 + 9e-5, 1.0, 1e-4));
    }

    #[test]
    fn phi_examples() {
        let mut st = IterateState::new(scalar(0.0), scalar(0.0));
        st.advance(scalar(0.0), scalar(2.0));
        let phi = lyapunov_phi(5.0, &st, "2-6", 0.0, 0.4, 1.0, 1.0).unwrap();
        assert!((phi - 5.64).abs() < 1e-12);
        assert_eq!(lyapunov_phi(5.0, &st, "3-6", 0.0, 0.0, 1.0, 1.0).unwrap(), 5.0);
        assert!(lyapunov_phi(5.0, &st, "9-9", 0.4, 0.4, 1.0, 1.0).is_err());
    }

    #[test]
    fn margin_examples() {
        let emb = AppliedUpdate::Embedded { c: 0.4, eta: 1.0 };
        let a = descent_margin_a("3-6", &emb, &emb).unwrap();
        assert!((a - 0.09).abs() < 1e-12);
        let a = descent_margin_a("1-6", &AppliedUpdate::Proximal { zeta: 2.0 }, &emb).unwrap();
        assert!((a - 0.09).abs() < 1e-12);
        let edge = AppliedUpdate::Embedded { c: 0.5, eta: 1.0 };
        assert!(descent_margin_a("3-6", &edge, &emb).is_err());
        assert!(descent_margin_a("2-6", &emb, &emb).is_err());
    }

    #[test]
    fn separable_quadratic_descends() {
        let p = SeparableQuadratic::new(Shape::new(1, 1), Shape::new(1, 1));
        let mut cfg = SolverConfig::new(UpdateRule::prox_linear(), UpdateRule::prox_linear());
        cfg.run.stop_tol = 1e-10;
        let res = solve(&p, &cfg, scalar(1.0), scalar(1.0)).unwrap();
        assert_eq!(res.combination_label, "PALM");
        assert!(res.converged());
        let mut prev = 1.0;
        for r in &res.trace {
            assert!(r.objective < prev || r.objective == 0.0);
            prev = r.objective;
        }
        assert!(res.final_x.norm() < 1e-4 && res.final_y.norm() < 1e-4);
    }

    #[test]
    fn short_trace_is_precondition_error() {
        let p = SeparableQuadratic::new(Shape::new(1, 1), Shape::new(1, 1));
        let mut cfg = SolverConfig::new(UpdateRule::prox_linear(), UpdateRule::prox_linear());
        cfg.run.max_outer = 2;
        let res = solve(&p, &cfg, scalar(1.0), scalar(1.0)).unwrap();
        assert!(check_sufficient_descent(&res.trace, "PALM", 0.0).is_err());
    }
}
