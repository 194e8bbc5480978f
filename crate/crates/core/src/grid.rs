//! The discretized support of admissible costs and tolls.

use crate::error::{Error, Result};
use crate::Money;

const ALIGN_TOL: f64 = 1e-9;

/// Evenly spaced price points `q, q + step, ..., Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceGrid {
    lower: Money,
    upper: Money,
    step: Money,
    intervals: usize,
}

impl PriceGrid {
    pub fn new(lower: Money, upper: Money, step: Money) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite".into()));
        }
        if lower < 0.0 || lower >= upper {
            return Err(Error::InvalidGrid(format!(
                "require 0 <= q < Q, got q = {lower}, Q = {upper}"
            )));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let ratio = (upper - lower) / step;
        let intervals = ratio.round();
        if (ratio - intervals).abs() > ALIGN_TOL * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "Q - q = {} is not a multiple of step {step}",
                upper - lower
            )));
        }
        Ok(Self {
            lower,
            upper,
            step,
            intervals: intervals as usize,
        })
    }

    /// Integer grid `{q, q+1, ..., Q}`.
    pub fn integer(lower: Money, upper: Money) -> Result<Self> {
        Self::new(lower, upper, 1.0)
    }

    pub fn lower(&self) -> Money {
        self.lower
    }

    pub fn upper(&self) -> Money {
        self.upper
    }

    pub fn step(&self) -> Money {
        self.step
    }

    /// Number of grid points, `(Q - q)/step + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, index: usize) -> Money {
        debug_assert!(index <= self.intervals);
        if index == self.intervals {
            self.upper
        } else {
            self.lower + index as f64 * self.step
        }
    }

    pub fn points(&self) -> impl DoubleEndedIterator<Item = Money> + ExactSizeIterator + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn clamp(&self, value: Money) -> Money {
        value.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, value: Money) -> bool {
        value >= self.lower - ALIGN_TOL && value <= self.upper + ALIGN_TOL
    }

    fn position(&self, value: Money) -> f64 {
        (self.clamp(value) - self.lower) / self.step
    }

    /// Index of the grid point nearest to `value` (after clamping).
    pub fn nearest_index(&self, value: Money) -> usize {
        (self.position(value).round() as usize).min(self.intervals)
    }

    /// Index of the largest grid point `<= value`, clamped to the grid.
    pub fn floor_index(&self, value: Money) -> usize {
        ((self.position(value) + ALIGN_TOL).floor() as usize).min(self.intervals)
    }

    /// Index of the smallest grid point `>= value`, clamped to the grid.
    pub fn ceil_index(&self, value: Money) -> usize {
        let p = self.position(value);
        ((p - ALIGN_TOL).ceil().max(0.0) as usize).min(self.intervals)
    }

    /// Nearest grid point, clamped into `[q, Q]`.
    pub fn snap(&self, value: Money) -> Money {
        self.point(self.nearest_index(value))
    }

    /// Index of `value` if it lies on the grid.
    pub fn index_of(&self, value: Money) -> Option<usize> {
        if !self.contains(value) {
            return None;
        }
        let i = self.nearest_index(value);
        ((self.point(i) - value).abs() <= ALIGN_TOL * self.step.max(1.0)).then_some(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_expected_count() {
        let g = PriceGrid::new(0.0, 1000.0, 10.0).unwrap();
        assert_eq!(g.len(), 101);
        let pts: Vec<_> = g.points().collect();
        assert_eq!(pts.len(), 101);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(pts[0], 0.0);
        assert_eq!(*pts.last().unwrap(), 1000.0);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(PriceGrid::new(5.0, 5.0, 1.0).is_err());
        assert!(PriceGrid::new(-1.0, 5.0, 1.0).is_err());
        assert!(PriceGrid::new(0.0, 5.0, 0.0).is_err());
        assert!(PriceGrid::new(0.0, 5.0, 2.0).is_err());
    }

    #[test]
    fn fractional_step() {
        let g = PriceGrid::new(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.index_of(0.3), Some(3));
        assert_eq!(g.index_of(0.35), None);
    }

    #[test]
    fn snapping_is_idempotent() {
        let g = PriceGrid::new(2.0, 50.0, 4.0).unwrap();
        for x in [-3.0, 2.0, 3.9, 4.1, 17.0, 49.0, 51.0, 1e6] {
            let s = g.snap(x);
            assert_eq!(g.snap(s), s);
            assert_eq!(g.clamp(g.clamp(x)), g.clamp(x));
            assert!(g.index_of(s).is_some());
        }
    }

    #[test]
    fn floor_and_ceil() {
        let g = PriceGrid::integer(0.0, 10.0).unwrap();
        assert_eq!(g.floor_index(4.5), 4);
        assert_eq!(g.ceil_index(4.5), 5);
        assert_eq!(g.floor_index(4.0), 4);
        assert_eq!(g.ceil_index(4.0), 4);
        assert_eq!(g.ceil_index(-2.0), 0);
        assert_eq!(g.floor_index(12.0), 10);
    }
}
