//! Baseline interval constructors: conformalized quantile regression (CQR),
//! raw quantile-regression intervals and Gaussian intervals.

use std::f64::consts::SQRT_2;

use crate::conformal::{clip_interval, conformal_quantile};
use crate::error::{Error, Result};
use crate::special::inverse_erf;
use crate::types::{Alpha, GaussianPredictionRecord, Interval, QuantilePredictionRecord, TargetBounds};

/// Frozen CQR threshold. Unlike CDP the threshold may be negative when the
/// raw quantile band overcovers.
#[derive(Debug, Clone, PartialEq)]
pub struct CqrCalibration {
    pub s_hat: f64,
    pub n_cal: usize,
    pub alpha: Alpha,
    pub bounds: Option<TargetBounds>,
}

/// Signed distance of `y` outside the quantile band.
pub fn cqr_score(rec: &QuantilePredictionRecord) -> f64 {
    (rec.q_lo - rec.y_true).max(rec.y_true - rec.q_hi)
}

pub fn calibrate_cqr(
    cal: &[QuantilePredictionRecord],
    alpha: Alpha,
    bounds: Option<TargetBounds>,
) -> Result<CqrCalibration> {
    if cal.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let scores: Vec<f64> = cal.iter().map(cqr_score).collect();
    Ok(CqrCalibration { s_hat: conformal_quantile(&scores, alpha)?, n_cal: cal.len(), alpha, bounds })
}

/// `[q_lo - s_hat, q_hi + s_hat]`, collapsing to the midpoint if the shifted
/// endpoints cross.
pub fn predict_cqr(q_lo: f64, q_hi: f64, calib: &CqrCalibration) -> Result<Interval> {
    if !(q_lo.is_finite() && q_hi.is_finite()) {
        return Err(Error::NonFiniteRecord);
    }
    if calib.s_hat.is_infinite() {
        return calib.bounds.map(|b| b.as_interval()).ok_or(Error::UnboundedInterval);
    }
    let (iv, _) = Interval::or_midpoint(q_lo - calib.s_hat, q_hi + calib.s_hat);
    Ok(clip_interval(iv, calib.bounds))
}

impl CqrCalibration {
    pub fn predict(&self, q_lo: f64, q_hi: f64) -> Result<Interval> {
        predict_cqr(q_lo, q_hi, self)
    }
}

/// The raw model band `[q_lo, q_hi]`. The flag reports crossed quantiles,
/// which collapse to their midpoint.
pub fn predict_qr_raw(rec: &QuantilePredictionRecord, bounds: Option<TargetBounds>) -> (Interval, bool) {
    let (iv, crossed) = Interval::or_midpoint(rec.q_lo, rec.q_hi);
    (clip_interval(iv, bounds), crossed)
}

/// Two-sided standard normal critical value `sqrt(2) * erfinv(1 - alpha)`.
pub fn gaussian_z(alpha: Alpha) -> f64 {
    SQRT_2 * inverse_erf(alpha.coverage()).expect("1 - alpha lies in (0, 1)")
}

/// Unclipped Gaussian band `[mu - z sigma, mu + z sigma]`.
pub fn gaussian_interval_raw(rec: &GaussianPredictionRecord, alpha: Alpha) -> Interval {
    let half = gaussian_z(alpha) * rec.sigma;
    Interval::new(rec.mu - half, rec.mu + half).expect("sigma is non-negative")
}

pub fn gaussian_interval(rec: &GaussianPredictionRecord, alpha: Alpha, bounds: Option<TargetBounds>) -> Interval {
    clip_interval(gaussian_interval_raw(rec, alpha), bounds)
}
