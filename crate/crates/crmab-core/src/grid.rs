//! Uniform discretization of the belief interval `[0, 1]` with linear
//! interpolation.
//!
//! Every solver in this crate stores value functions as arrays over a
//! [`BeliefGrid`] and evaluates them off-grid by linear interpolation, so
//! the grid carries the interpolation logic in one place.

use alloc::vec::Vec;

use crate::error::Error;

/// A uniform grid over `[0, 1]` including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    points: Vec<f64>,
}

impl BeliefGrid {
    /// Builds a uniform grid with `resolution` points (`resolution >= 2`).
    pub fn uniform(resolution: usize) -> Result<Self, Error> {
        if resolution < 2 {
            return Err(Error::InvalidParameter {
                name: "resolution",
                value: resolution as f64,
                requirement: "at least 2 grid points",
            });
        }
        let last = (resolution - 1) as f64;
        let points = (0..resolution).map(|i| i as f64 / last).collect();
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Distance between adjacent grid points.
    pub fn spacing(&self) -> f64 {
        1.0 / (self.points.len() - 1) as f64
    }

    /// Returns the left cell index and fractional offset of `belief`,
    /// clamped to `[0, 1]`. The index is at most `len() - 2` and the
    /// fraction lies in `[0, 1]`.
    pub fn locate(&self, belief: f64) -> (usize, f64) {
        let n = self.points.len();
        let t = belief.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (t as usize).min(n - 2);
        (i, t - i as f64)
    }

    /// Linearly interpolates `values` (one entry per grid point) at `belief`.
    pub fn interp(&self, values: &[f64], belief: f64) -> f64 {
        debug_assert_eq!(values.len(), self.points.len());
        let (i, t) = self.locate(belief);
        (1.0 - t) * values[i] + t * values[i + 1]
    }
}

/// Interpolates `values` at a pre-located grid position.
#[inline]
pub(crate) fn lerp(values: &[f64], at: (usize, f64)) -> f64 {
    let (i, t) = at;
    (1.0 - t) * values[i] + t * values[i + 1]
}
