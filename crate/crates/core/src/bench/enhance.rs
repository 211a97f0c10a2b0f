use std::str::FromStr;

use crate::baselines::{run_baseline, Baseline};
use crate::engine::{solve, RunOptions, SolveResult, SolverConfig};
use crate::error::{Result, TecuError};
use crate::operators::IlluminationOperator;
use crate::problem::Mat;
use crate::tasks::{build_lie_problem, Image, LieInstance};
use crate::update::{EmbeddedRule, UpdateRule};

/// Exponent applied to the recovered illumination before relighting.
pub const DISPLAY_GAMMA: f64 = 2.2;

/// Guard for the relighting ratio at black pixels.
const RATIO_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnhanceSolver {
    /// Embedded illumination propagator on I, exact proximal R ("3-4").
    Tecu,
    Palm,
}

impl FromStr for EnhanceSolver {
    type Err = TecuError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tecu" => Ok(EnhanceSolver::Tecu),
            "palm" => Ok(EnhanceSolver::Palm),
            _ => Err(TecuError::invalid(format!("unknown enhance solver '{s}' (expected tecu or palm)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Enhancement {
    pub image: Image,
    pub illumination: Mat,
    pub reflectance: Mat,
    pub result: SolveResult,
}

/// Decomposes the max-channel luminance into `I⊙R`, brightens `I` by
/// `I^{1/γ}` and rescales every channel by the brightened-to-original ratio.
pub fn enhance_image(img: &Image, alpha: f64, solver: EnhanceSolver, opts: &RunOptions) -> Result<Enhancement> {
    let observed = img.max_channel();
    let problem = build_lie_problem(LieInstance::new(observed.clone(), alpha))?;
    let (i0, r0) = problem.initial_point();
    let result = match solver {
        EnhanceSolver::Tecu => {
            let op = IlluminationOperator::new(problem.observed_arc(), 2);
            let cfg = SolverConfig {
                rule_x: UpdateRule::Embedded(EmbeddedRule::new(Box::new(op), 0.4, 1.0)),
                rule_y: UpdateRule::Proximal { zeta: 1.0 },
                run: *opts,
                seed: 0,
            };
            solve(&problem, &cfg, i0, r0)?
        }
        EnhanceSolver::Palm => run_baseline(&problem, Baseline::palm(), opts, i0, r0)?,
    };
    let illumination = result.final_x.clone();
    let reflectance = result.final_y.clone();
    let boosted = illumination.map(|v| v.max(0.0).powf(1.0 / DISPLAY_GAMMA));
    let mut data = img.data.clone();
    for row in 0..img.height {
        for col in 0..img.width {
            let base = illumination[(row, col)].max(RATIO_FLOOR);
            let ratio = boosted[(row, col)].max(RATIO_FLOOR) / base;
            for ch in 0..img.channels {
                let k = (row * img.width + col) * img.channels + ch;
                data[k] = (data[k] * ratio).clamp(0.0, 1.0);
            }
        }
    }
    let image = Image::new(img.width, img.height, img.channels, data)?;
    Ok(Enhancement {
        image,
        illumination,
        reflectance,
        result,
    })
}
