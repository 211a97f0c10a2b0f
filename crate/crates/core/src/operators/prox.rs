//! Closed-form proximal maps used by the two tasks.

use crate::error::{Result, TecuError};
use crate::problem::Mat;

/// Proximal map of `lambda·‖·‖₀` at weight `tau`: keeps `vᵢ` when
/// `|vᵢ| > √(2λ/τ)`, zero otherwise (ties go to zero).
pub fn hard_threshold(v: &Mat, lambda: f64, tau: f64) -> Mat {
    let thresh = (2.0 * lambda / tau).sqrt();
    v.map(|e| if e.abs() > thresh { e } else { 0.0 })
}

/// Scales every column to unit Euclidean norm. A zero column becomes the
/// first canonical basis vector.
pub fn sphere_project(d: &Mat) -> Mat {
    let mut out = d.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else {
            col.fill(0.0);
            if !col.is_empty() {
                col[0] = 1.0;
            }
        }
    }
    out
}

/// Elementwise clamp of `v` into `[lo, hi]`.
pub fn box_project(v: &Mat, lo: &Mat, hi: &Mat) -> Result<Mat> {
    if v.shape() != lo.shape() || v.shape() != hi.shape() {
        return Err(TecuError::invalid("box_project: shape mismatch"));
    }
    if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
        return Err(TecuError::invalid("box_project: lower bound exceeds upper bound"));
    }
    Ok(v.zip_zip_map(lo, hi, |e, l, h| e.max(l).min(h)))
}

/// [`box_project`] with scalar bounds.
pub fn clamp_scalar(v: &Mat, lo: f64, hi: f64) -> Mat {
    v.map(|e| e.max(lo).min(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec(vals: &[f64]) -> Mat {
        Mat::from_column_slice(vals.len(), 1, vals)
    }

    #[test]
    fn zero_penalty_keeps_everything() {
        let v = vec(&[0.1, -3.0, 0.0, 1e-9]);
        assert_eq!(hard_threshold(&v, 0.0, 1.0), v);
    }

    #[test]
    fn threshold_example() {
        let out = hard_threshold(&vec(&[1.5, 0.5, -2.0]), 1.0, 2.0);
        assert_eq!(out, vec(&[1.5, 0.0, -2.0]));
    }

    #[test]
    fn exact_tie_goes_to_zero() {
        assert_eq!(hard_threshold(&vec(&[1.0]), 1.0, 2.0), vec(&[0.0]));
        assert_eq!(hard_threshold(&vec(&[-1.0]), 1.0, 2.0), vec(&[0.0]));
    }

    #[test]
    fn sphere_cases() {
        let d = Mat::from_column_slice(2, 3, &[3.0, 4.0, 0.0, 0.0, 0.6, 0.8]);
        let p = sphere_project(&d);
        assert!((p[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((p[(1, 0)] - 0.8).abs() < 1e-15);
        assert_eq!(p[(0, 1)], 1.0);
        assert_eq!(p[(1, 1)], 0.0);
        assert!((p[(0, 2)] - 0.6).abs() < 1e-15);
        assert!((p[(1, 2)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn box_cases() {
        let lo = vec(&[0.0, 0.0]);
        let hi = vec(&[1.0, 1.0]);
        assert_eq!(box_project(&vec(&[-1.0, 2.0]), &lo, &hi).unwrap(), vec(&[0.0, 1.0]));
        assert_eq!(box_project(&vec(&[0.3, 0.7]), &lo, &hi).unwrap(), vec(&[0.3, 0.7]));
        let o = vec(&[0.2, 0.9]);
        assert_eq!(box_project(&o, &lo, &o).unwrap(), o);
        assert!(box_project(&o, &hi, &lo).is_err());
    }
}
