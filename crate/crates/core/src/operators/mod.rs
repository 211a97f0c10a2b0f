//! Inner solvers that can be embedded in a block update, and the proximal
//! primitives they share.

mod admm;
mod illumination;
mod pith;
mod prox;
mod prox_gradient;

pub use admm::{admm_d_step, default_rho, AdmmContext, AdmmDictionaryOperator};
pub use illumination::{box_filter, illumination_propagate, IlluminationOperator};
pub use pith::{pith_w_step, PithConfig, PithOperator};
pub use prox::{box_project, clamp_scalar, hard_threshold, sphere_project};
pub use prox_gradient::ProxGradientOperator;
