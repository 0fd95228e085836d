//! Domain types shared by every interval method.

use std::fmt;

use crate::error::{Error, Result};

/// Miscoverage rate. Intervals target coverage `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Target coverage `1 - alpha`.
    pub fn coverage(self) -> f64 {
        1.0 - self.0
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Closed real interval `[lo, hi]` in target units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        // NaN fails the comparison, infinite endpoints are allowed
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Builds an interval from possibly crossed endpoints; crossed pairs
    /// collapse to their midpoint. Returns the interval and whether the
    /// endpoints crossed.
    pub fn or_midpoint(a: f64, b: f64) -> (Self, bool) {
        if a <= b {
            (Self { lo: a, hi: b }, false)
        } else {
            (Self::point(0.5 * (a + b)), true)
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Closed containment at both endpoints.
    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Admissible label range, e.g. `[0, 63]` for BDI-II scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetBounds {
    min: f64,
    max: f64,
}

impl TargetBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if min.is_finite() && max.is_finite() && min < max {
            Ok(Self { min, max })
        } else {
            Err(Error::InvalidBounds { min, max })
        }
    }

    /// The BDI-II score range `[0, 63]`.
    pub fn bdi() -> Self {
        Self { min: 0.0, max: 63.0 }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn as_interval(&self) -> Interval {
        Interval { lo: self.min, hi: self.max }
    }

    pub fn clamp(&self, y: f64) -> f64 {
        y.clamp(self.min, self.max)
    }
}

/// One observation from a point regressor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    pub y_true: f64,
    pub y_pred: f64,
}

impl PredictionRecord {
    pub fn new(y_true: f64, y_pred: f64) -> Result<Self> {
        if y_true.is_finite() && y_pred.is_finite() {
            Ok(Self { y_true, y_pred })
        } else {
            Err(Error::NonFiniteRecord)
        }
    }

    /// Absolute residual `|y - y_hat|`.
    pub fn residual(&self) -> f64 {
        (self.y_true - self.y_pred).abs()
    }
}

/// One observation from a quantile regressor emitting the `alpha/2` and
/// `1 - alpha/2` quantiles. The quantiles may cross.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantilePredictionRecord {
    pub y_true: f64,
    pub q_lo: f64,
    pub q_hi: f64,
}

impl QuantilePredictionRecord {
    pub fn new(y_true: f64, q_lo: f64, q_hi: f64) -> Result<Self> {
        if y_true.is_finite() && q_lo.is_finite() && q_hi.is_finite() {
            Ok(Self { y_true, q_lo, q_hi })
        } else {
            Err(Error::NonFiniteRecord)
        }
    }

    pub fn is_crossed(&self) -> bool {
        self.q_lo > self.q_hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.q_lo + self.q_hi)
    }
}

/// One observation from a mean/variance regressor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPredictionRecord {
    pub y_true: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianPredictionRecord {
    pub fn new(y_true: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(y_true.is_finite() && mu.is_finite() && sigma.is_finite()) {
            return Err(Error::NonFiniteRecord);
        }
        if sigma < 0.0 {
            return Err(Error::NegativeSigma(sigma));
        }
        Ok(Self { y_true, mu, sigma })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_rejects_out_of_range() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN, f64::INFINITY] {
            assert!(Alpha::new(bad).is_err(), "{bad}");
        }
        assert_eq!(Alpha::new(0.1).unwrap().value(), 0.1);
    }

    #[test]
    fn interval_rejects_reversed_and_nan() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert_eq!(Interval::new(1.0, 3.0).unwrap().width(), 2.0);
    }

    #[test]
    fn bounds_require_min_below_max() {
        assert!(TargetBounds::new(3.0, 3.0).is_err());
        assert!(TargetBounds::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn records_reject_non_finite() {
        assert!(PredictionRecord::new(f64::NAN, 1.0).is_err());
        assert!(QuantilePredictionRecord::new(1.0, 9.0, 4.0).is_ok());
        assert_eq!(GaussianPredictionRecord::new(1.0, 1.0, -0.5), Err(Error::NegativeSigma(-0.5)));
    }
}
