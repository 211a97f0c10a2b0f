//! Concrete problems and their data.

pub mod dl;
pub mod lie;
pub mod pnm;
pub mod synth;
pub mod toy;

pub use dl::{build_dl_problem, DlInstance, DlProblem};
pub use lie::{build_lie_problem, forward_differences, neumann_laplacian, LieInstance, LieProblem};
pub use pnm::{decode_pnm, encode_pnm, read_image_pnm, write_image_pnm, write_image_pnm_with, Image, PnmFormat};
pub use synth::{seeded_rng, synth_dl_data, synth_retinex, SynthData, SynthRetinex, SynthSpec};
pub use toy::SeparableQuadratic;
