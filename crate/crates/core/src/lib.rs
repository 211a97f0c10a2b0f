//! Two-block coordinate update solvers for
//!
//! ```text
//! min_{x, y} Ψ(x, y) = f(x) + g(y) + H(x, y)
//! ```
//!
//! with `f`, `g` proper lower semicontinuous (possibly nonconvex) and `H`
//! smooth. Each outer iteration updates `x` then `y`, and each block may use
//! an exact proximal step, a linearized (prox-linear) step, or an embedded
//! inner solver whose output is accepted only when a relative error bound
//! holds, with a prox-linear fallback when the inner budget runs out.
//!
//! ```no_run
//! use tecu::prelude::*;
//!
//! let data = synth_dl_data(&SynthSpec::default()).unwrap();
//! let problem = build_dl_problem(DlInstance::new(data.y, 0.1, 32)).unwrap();
//! let (w0, d0) = problem.initial_point(&mut seeded_rng(7));
//! let admm = AdmmDictionaryOperator::new(problem.data_arc());
//! let config = SolverConfig::new(
//!     UpdateRule::prox_linear(),
//!     UpdateRule::Embedded(EmbeddedRule::new(Box::new(admm), 0.4, 1.0)),
//! );
//! let result = solve(&problem, &config, w0, d0).unwrap();
//! println!("{} after {} iterations", result.combination_label, result.iterations());
//! ```

pub mod baselines;
pub mod bench;
pub mod engine;
pub mod error;
pub mod operators;
pub mod problem;
pub mod tasks;
pub mod update;

pub use error::{Result, TecuError};

pub mod prelude {
    pub use crate::baselines::{run_baseline, run_inv, Baseline, InertialConfig};
    pub use crate::engine::{
        check_sufficient_descent, solve, Combination, Diagnostics, RunOptions, SolveResult, SolveStatus, SolverConfig,
    };
    pub use crate::error::{Result, TecuError};
    pub use crate::operators::{
        AdmmDictionaryOperator, IlluminationOperator, PithOperator, ProxGradientOperator,
    };
    pub use crate::problem::{evaluate_objective, validate_problem, BlockProblem, IterateState, Mat, Shape, TraceRecord};
    pub use crate::tasks::{
        build_dl_problem, build_lie_problem, seeded_rng, synth_dl_data, synth_retinex, DlInstance, LieInstance,
        SynthSpec,
    };
    pub use crate::update::{EmbeddedOperator, EmbeddedRule, UpdateRule};
}
