//! Finite-sample conformal quantile and interval truncation.
//!
//! The calibrated threshold is the `k`-th smallest score with
//! `k = ceil((N + 1)(1 - alpha))`. When `k > N` the threshold is
//! `f64::INFINITY`, which downstream code widens to the full target bounds.

use crate::error::{Error, Result};
use crate::types::{Alpha, Interval, TargetBounds};

// Guards `ceil` against products such as 10 * 0.9 landing one ulp above an
// integer. Any non-integer (N + 1)(1 - alpha) of practical size sits much
// further than this from the next integer.
const RANK_SLACK: f64 = 1e-9;

/// 1-based rank `k = ceil((n + 1)(1 - alpha))`. May exceed `n`.
pub fn conformal_rank(n: usize, alpha: Alpha) -> usize {
    let raw = (n as f64 + 1.0) * alpha.coverage();
    let k = (raw - RANK_SLACK).ceil();
    k.max(1.0) as usize
}

/// The `k`-th smallest score, or `+inf` when `k` exceeds the sample size.
/// Ties are resolved by rank; no interpolation.
pub fn conformal_quantile(scores: &[f64], alpha: Alpha) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore { index });
    }
    let k = conformal_rank(scores.len(), alpha);
    if k > scores.len() {
        return Ok(f64::INFINITY);
    }
    let mut sorted = scores.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Truncates `iv` to `bounds`. An interval lying entirely outside collapses
/// to the nearest bound.
pub fn clip_interval(iv: Interval, bounds: Option<TargetBounds>) -> Interval {
    let Some(b) = bounds else {
        return iv;
    };
    if iv.hi() < b.min() {
        return Interval::point(b.min());
    }
    if iv.lo() > b.max() {
        return Interval::point(b.max());
    }
    Interval::new(iv.lo().max(b.min()), iv.hi().min(b.max())).expect("clamped endpoints are ordered")
}

/// Symmetric band `[center - half_width, center + half_width]`, truncated.
/// An infinite half-width yields the full bounds, or `UnboundedInterval`
/// when there are none.
pub fn symmetric_interval(center: f64, half_width: f64, bounds: Option<TargetBounds>) -> Result<Interval> {
    if half_width.is_infinite() {
        return bounds.map(|b| b.as_interval()).ok_or(Error::UnboundedInterval);
    }
    let (iv, _) = Interval::or_midpoint(center - half_width, center + half_width);
    Ok(clip_interval(iv, bounds))
}
