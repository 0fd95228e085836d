//! Split conformal prediction for point regressors.

use crate::conformal::{conformal_quantile, symmetric_interval};
use crate::error::{Error, Result};
use crate::types::{Alpha, Interval, PredictionRecord, TargetBounds};

/// Frozen residual threshold from a calibration set.
#[derive(Debug, Clone, PartialEq)]
pub struct CdpCalibration {
    /// Calibrated residual threshold; `+inf` when the calibration set is too
    /// small for the requested alpha.
    pub s_hat: f64,
    pub n_cal: usize,
    pub alpha: Alpha,
    pub bounds: Option<TargetBounds>,
}

/// Residual scores `|y - y_hat|`, then the conformal quantile.
pub fn calibrate_cdp(cal: &[PredictionRecord], alpha: Alpha, bounds: Option<TargetBounds>) -> Result<CdpCalibration> {
    if cal.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let scores: Vec<f64> = cal.iter().map(PredictionRecord::residual).collect();
    let s_hat = conformal_quantile(&scores, alpha)?;
    Ok(CdpCalibration { s_hat, n_cal: cal.len(), alpha, bounds })
}

/// `[y_hat - s_hat, y_hat + s_hat]`, truncated to the calibration bounds.
pub fn predict_cdp(y_hat: f64, calib: &CdpCalibration) -> Result<Interval> {
    if !y_hat.is_finite() {
        return Err(Error::NonFiniteRecord);
    }
    symmetric_interval(y_hat, calib.s_hat, calib.bounds)
}

impl CdpCalibration {
    pub fn predict(&self, y_hat: f64) -> Result<Interval> {
        predict_cdp(y_hat, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(y_pred: f64, y_true: f64) -> PredictionRecord {
        PredictionRecord::new(y_true, y_pred).unwrap()
    }

    fn calib(s_hat: f64, bounds: Option<TargetBounds>) -> CdpCalibration {
        CdpCalibration { s_hat, n_cal: 10, alpha: Alpha::new(0.1).unwrap(), bounds }
    }

    #[test]
    fn calibrate_examples() {
        let cal = [rec(1.0, 2.0), rec(3.0, 3.0), rec(5.0, 1.0), rec(2.0, 4.0)];
        let c = calibrate_cdp(&cal, Alpha::new(0.2).unwrap(), None).unwrap();
        assert_eq!(c.s_hat, 4.0);
        assert_eq!(c.n_cal, 4);

        let exact = [rec(1.0, 1.0), rec(2.0, 2.0), rec(3.0, 3.0)];
        let c = calibrate_cdp(&exact, Alpha::new(0.5).unwrap(), None).unwrap();
        assert_eq!(c.s_hat, 0.0);

        let c = calibrate_cdp(&[rec(1.0, 2.0)], Alpha::new(0.1).unwrap(), None).unwrap();
        assert_eq!(c.s_hat, f64::INFINITY);
    }

    #[test]
    fn calibrate_rejects_empty() {
        assert_eq!(calibrate_cdp(&[], Alpha::new(0.1).unwrap(), None), Err(Error::EmptyCalibration));
    }

    #[test]
    fn predict_examples() {
        let iv = |l, h| Interval::new(l, h).unwrap();
        let bdi = Some(TargetBounds::bdi());
        assert_eq!(predict_cdp(10.0, &calib(3.0, None)).unwrap(), iv(7.0, 13.0));
        assert_eq!(predict_cdp(1.0, &calib(3.0, bdi)).unwrap(), iv(0.0, 4.0));
        assert_eq!(predict_cdp(30.0, &calib(f64::INFINITY, bdi)).unwrap(), iv(0.0, 63.0));
        assert_eq!(predict_cdp(30.0, &calib(f64::INFINITY, None)), Err(Error::UnboundedInterval));
    }

    #[test]
    fn unclipped_width_is_twice_threshold() {
        let c = calib(2.5, None);
        for y in [-10.0, 0.0, 3.3, 100.0] {
            assert_eq!(predict_cdp(y, &c).unwrap().width(), 5.0);
        }
    }
}
