//! Seeded synthetic data for dictionary learning and Retinex runs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TecuError};
use crate::operators::sphere_project;
use crate::problem::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Non-zeros per code row.
    pub sparsity: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 16,
            m: 32,
            p: 200,
            sparsity: 3,
            noise_sigma: 0.01,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.p == 0 {
            return Err(TecuError::invalid("synthetic data: n, m and p must be at least 1"));
        }
        if self.sparsity == 0 || self.sparsity > self.m {
            return Err(TecuError::invalid(format!(
                "synthetic data: sparsity must lie in [1, m = {}], got {}",
                self.m, self.sparsity
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(TecuError::invalid("synthetic data: noise_sigma must be non-negative"));
        }
        Ok(())
    }
}

/// Seeded generator shared by data synthesis and initialization.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Synthetic dictionary learning data.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub y: Mat,
    pub d_true: Mat,
    pub w_true: Mat,
}

/// `Y = D★W★ᵀ + σ·N` with unit-norm Gaussian atoms and exactly `s`
/// Gaussian non-zeros per code row at uniform positions.
pub fn synth_dl_data(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let d_raw = Mat::from_fn(spec.n, spec.m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let d_true = sphere_project(&d_raw);
    let mut w_true = Mat::zeros(spec.p, spec.m);
    for row in 0..spec.p {
        for col in sample(&mut rng, spec.m, spec.sparsity) {
            let mut v: f64 = rng.sample(StandardNormal);
            while v == 0.0 {
                v = rng.sample(StandardNormal);
            }
            w_true[(row, col)] = v;
        }
    }
    let mut y = &d_true * w_true.transpose();
    if spec.noise_sigma > 0.0 {
        for v in y.iter_mut() {
            *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(SynthData { y, d_true, w_true })
}

/// Synthetic low-light pair: smooth illumination `I★` in `[lo, hi]`,
/// piecewise reflectance `R★` in `[0.6, 1]`, and `O = I★⊙R★`.
#[derive(Debug, Clone)]
pub struct SynthRetinex {
    pub observed: Mat,
    pub illumination: Mat,
    pub reflectance: Mat,
}

pub fn synth_retinex(size: usize, seed: u64) -> SynthRetinex {
    let mut rng = seeded_rng(seed);
    let (lo, hi) = (0.15, 0.45);
    let phase: f64 = rng.random::<f64>() * std::f64::consts::PI;
    let n = size.max(1) as f64;
    let illumination = Mat::from_fn(size, size, |i, j| {
        let (u, v) = (i as f64 / n, j as f64 / n);
        let s = 0.5 + 0.25 * (std::f64::consts::PI * u + phase).sin() + 0.25 * v;
        lo + (hi - lo) * s.clamp(0.0, 1.0)
    });
    let block = 4.max(size / 8);
    let tiles = size.div_ceil(block);
    let levels: Vec<f64> = (0..tiles * tiles).map(|_| 0.6 + 0.4 * rng.random::<f64>()).collect();
    let reflectance = Mat::from_fn(size, size, |i, j| levels[(i / block) * tiles + j / block]);
    let observed = illumination.component_mul(&reflectance);
    SynthRetinex {
        observed,
        illumination,
        reflectance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_data_is_exact() {
        let spec = SynthSpec {
            noise_sigma: 0.0,
            seed: 3,
            ..SynthSpec::default()
        };
        let data = synth_dl_data(&spec).unwrap();
        assert_eq!((&data.y - &data.d_true * data.w_true.transpose()).norm(), 0.0);
    }

    #[test]
    fn construction_invariants() {
        let spec = SynthSpec {
            seed: 11,
            ..SynthSpec::default()
        };
        let data = synth_dl_data(&spec).unwrap();
        for col in data.d_true.column_iter() {
            assert!((col.norm() - 1.0).abs() <= 1e-12);
        }
        for row in data.w_true.row_iter() {
            assert_eq!(row.iter().filter(|v| **v != 0.0).count(), spec.sparsity);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SynthSpec::default();
        assert_eq!(synth_dl_data(&spec).unwrap().y, synth_dl_data(&spec).unwrap().y);
    }

    #[test]
    fn bad_sparsity_rejected() {
        let spec = SynthSpec {
            sparsity: 40,
            ..SynthSpec::default()
        };
        assert!(synth_dl_data(&spec).is_err());
    }
}
