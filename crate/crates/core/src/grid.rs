//! Uniform one-dimensional sample grids.

use crate::error::{Error, Result};

/// Uniform 1-D sample grid standing in for a continuous coordinate.
///
/// A periodic grid samples `[lo, hi)` at spacing `(hi - lo)/n`; the right
/// endpoint is identified with the left one. A non-periodic grid samples
/// the closed interval `[lo, hi]` at spacing `(hi - lo)/(n - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    n: usize,
    lo: f64,
    hi: f64,
    periodic: bool,
}

impl GridSpec {
    /// Minimum number of samples for any grid.
    pub const MIN_SAMPLES: usize = 8;

    pub fn new(lo: f64, hi: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::parameter("lo/hi", "grid bounds must be finite"));
        }
        if hi <= lo {
            return Err(Error::parameter(
                "hi",
                format!("grid interval is degenerate: hi = {hi} must exceed lo = {lo}"),
            ));
        }
        if n < Self::MIN_SAMPLES {
            return Err(Error::parameter(
                "n",
                format!("need at least {} samples, got {n}", Self::MIN_SAMPLES),
            ));
        }
        Ok(GridSpec { n, lo, hi, periodic })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    /// Sample spacing.
    pub fn step(&self) -> f64 {
        if self.periodic {
            (self.hi - self.lo) / self.n as f64
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    /// Length of the covered interval, `hi - lo`.
    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }

    /// Coordinate of sample `k`.
    pub fn point(&self, k: usize) -> f64 {
        debug_assert!(k < self.n);
        self.lo + k as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    /// Index of the sample nearest to `x`, snapping within half a step.
    ///
    /// On a periodic grid `hi` wraps to index 0. Values outside `[lo, hi]`
    /// are rejected.
    pub fn nearest_index(&self, x: f64) -> Result<usize> {
        if x < self.lo || x > self.hi {
            return Err(Error::OutOfRange {
                value: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let k = ((x - self.lo) / self.step()).round() as usize;
        if k >= self.n {
            if self.periodic {
                Ok(0)
            } else {
                Ok(self.n - 1)
            }
        } else {
            Ok(k)
        }
    }
}

/// Build a grid; alias of [`GridSpec::new`] matching free-function call sites.
pub fn make_grid(lo: f64, hi: f64, n: usize, periodic: bool) -> Result<GridSpec> {
    GridSpec::new(lo, hi, n, periodic)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_step_and_points() {
        let g = make_grid(0.0, 1.0, 8, true).unwrap();
        assert_eq!(g.step(), 0.125);
        let pts = g.points();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[7], 0.875);
    }

    #[test]
    fn nonperiodic_step_spans_closed_interval() {
        let g = make_grid(-1.0, 1.0, 16, false).unwrap();
        assert!((g.step() - 2.0 / 15.0).abs() < 1e-15);
        assert_eq!(g.point(15), g.lo() + 15.0 * g.step());
    }

    #[test]
    fn rejects_degenerate_interval_and_tiny_n() {
        assert!(make_grid(0.0, 0.0, 8, true).is_err());
        assert!(make_grid(1.0, 0.0, 8, true).is_err());
        assert!(make_grid(0.0, 1.0, 7, false).is_err());
    }

    #[test]
    fn nearest_index_snaps_and_wraps() {
        let g = make_grid(0.0, 1.0, 8, true).unwrap();
        assert_eq!(g.nearest_index(0.25).unwrap(), 2);
        assert_eq!(g.nearest_index(0.26).unwrap(), 2);
        assert_eq!(g.nearest_index(1.0).unwrap(), 0); // wrap
        assert!(g.nearest_index(1.1).is_err());

        let h = make_grid(0.0, 1.0, 9, false).unwrap();
        assert_eq!(h.nearest_index(1.0).unwrap(), 8);
    }
}
