//! Deterministic smoothing propagator for the illumination block.
//!
//! Stands in for a learned illumination estimator: any operator with the
//! same [`EmbeddedOperator`] interface can be plugged in instead.

use std::sync::Arc;

use super::prox::box_project;
use crate::error::{Result, TecuError};
use crate::problem::{BlockProblem, Mat, Subproblem};
use crate::update::EmbeddedOperator;

/// Mean filter over a `(2r+1)×(2r+1)` window with replicated borders.
pub fn box_filter(img: &Mat, radius: usize) -> Mat {
    if radius == 0 || img.is_empty() {
        return img.clone();
    }
    let (h, w) = img.shape();
    let r = radius as isize;
    let norm = (2 * radius + 1) as f64;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horiz = Mat::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for dj in -r..=r {
                acc += img[(i, clamp(j as isize + dj, w))];
            }
            horiz[(i, j)] = acc / norm;
        }
    }
    let mut out = Mat::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for di in -r..=r {
                acc += horiz[(clamp(i as isize + di, h), j)];
            }
            out[(i, j)] = acc / norm;
        }
    }
    out
}

/// Box filter of `max(O, I_cur)` followed by projection onto `[0, O]`.
pub fn illumination_propagate(i_cur: &Mat, observed: &Mat, radius: i64) -> Result<Mat> {
    if radius < 0 {
        return Err(TecuError::invalid(format!("illumination radius must be non-negative, got {radius}")));
    }
    if i_cur.shape() != observed.shape() {
        return Err(TecuError::invalid("illumination_propagate: shape mismatch"));
    }
    let lifted = i_cur.zip_map(observed, f64::max);
    let smoothed = box_filter(&lifted, radius as usize);
    let zero = Mat::zeros(observed.nrows(), observed.ncols());
    box_project(&smoothed, &zero, observed)
}

#[derive(Debug, Clone)]
pub struct IlluminationOperator {
    observed: Arc<Mat>,
    radius: i64,
}

impl IlluminationOperator {
    pub fn new(observed: Arc<Mat>, radius: i64) -> Self {
        IlluminationOperator { observed, radius }
    }
}

impl EmbeddedOperator for IlluminationOperator {
    fn name(&self) -> &str {
        "illumination"
    }

    fn step(&mut self, _problem: &dyn BlockProblem, current: &Mat, _sub: &Subproblem<'_>, _eta: f64) -> Result<Mat> {
        illumination_propagate(current, &self.observed, self.radius)
    }

    fn box_clone(&self) -> Box<dyn EmbeddedOperator> {
        Box::new(self.clone())
    }
}
