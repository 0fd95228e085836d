//! Conformal prediction with approximate conditional coverage (CDP-ACC).
//!
//! Calibration predictions are split into `M` uniform bins over `[L, U]`.
//! Within each bin the labels are summarised by a `K`-cell histogram, which
//! stands in for `P(y | y_hat in bin)`. A label's conformal score is the
//! width of the shortest edge-aligned interval that contains it and carries
//! at least `1 - alpha` of the bin's mass. The bin's threshold is the
//! finite-sample conformal quantile of those scores, and the bin's interval
//! is the hull of all cells whose score does not exceed the threshold.
//!
//! Bins with fewer than `n_min` labels, or whose threshold is infinite, fall
//! back to a global residual calibration.
//!
//! Tie-break noise is drawn from `ChaCha8Rng` seeded with the configured
//! seed, one stream per bin (stream index = 0-based bin index).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cdp::{calibrate_cdp, predict_cdp, CdpCalibration};
use crate::conformal::{clip_interval, conformal_quantile};
use crate::error::{Error, Result};
use crate::types::{Alpha, Interval, PredictionRecord, TargetBounds};

/// Identifier of the generator behind tie-break noise.
pub const TIE_NOISE_RNG: &str = "chacha8";

/// Tolerance on the mass constraint so that, e.g., a mass of 0.9 summed from
/// counts is not rejected against `tau = 0.9`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Half-width given to a histogram whose labels are all identical, relative
/// to `max(1, |label|)`.
pub const DEGENERATE_HALF_WIDTH: f64 = 1e-6;

/// Uniform partition of the prediction axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    lower: f64,
    upper: f64,
    edges: Vec<f64>,
}

impl BinPartition {
    pub fn new(lower: f64, upper: f64, bins: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidPartition(format!("lower bound {lower} must be below upper bound {upper}")));
        }
        if bins < 1 {
            return Err(Error::InvalidPartition("bin count must be at least 1".into()));
        }
        Ok(Self { lower, upper, edges: uniform_edges(lower, upper, bins) })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// 0-based bin of `y_hat`. Bins are half-open except the last; values
    /// outside `[lower, upper]` clamp to the edge bins.
    pub fn bin_of(&self, y_hat: f64) -> usize {
        locate_cell(&self.edges, y_hat)
    }
}

fn uniform_edges(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let span = hi - lo;
    let mut edges: Vec<f64> = (0..=cells).map(|j| lo + span * j as f64 / cells as f64).collect();
    edges[cells] = hi;
    edges
}

/// Number of interior edges at or below `y`, i.e. the half-open cell index.
fn locate_cell(edges: &[f64], y: f64) -> usize {
    let interior = &edges[1..edges.len() - 1];
    interior.partition_point(|&e| e <= y)
}

/// Places each calibration label in the bin of its prediction.
pub fn partition_predictions(
    cal: &[PredictionRecord],
    lower: f64,
    upper: f64,
    bins: usize,
) -> Result<(BinPartition, Vec<Vec<f64>>)> {
    let partition = BinPartition::new(lower, upper, bins)?;
    if cal.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let mut labels = vec![Vec::new(); partition.bins()];
    for rec in cal {
        labels[partition.bin_of(rec.y_pred)].push(rec.y_true);
    }
    Ok((partition, labels))
}

/// Discretised label distribution on `[support_lo, support_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalHistogram {
    edges: Vec<f64>,
    mass: Vec<f64>,
    cdf: Vec<f64>,
}

impl ConditionalHistogram {
    /// Histogram with the given per-cell counts over uniform cells.
    pub fn from_counts(support_lo: f64, support_hi: f64, counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("histogram needs at least one cell".into()));
        }
        if !(support_lo.is_finite() && support_hi.is_finite() && support_lo < support_hi) {
            return Err(Error::InvalidParameter(format!("histogram support [{support_lo}, {support_hi}] is empty")));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyBin);
        }
        let total_f = total as f64;
        let mass = counts.iter().map(|&c| c as f64 / total_f).collect();
        let mut cdf = Vec::with_capacity(counts.len() + 1);
        let mut running = 0u64;
        cdf.push(0.0);
        for &c in counts {
            running += c;
            cdf.push(running as f64 / total_f);
        }
        Ok(Self { edges: uniform_edges(support_lo, support_hi, counts.len()), mass, cdf })
    }

    pub fn support_lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn support_hi(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.support_lo(), self.support_hi()).expect("support is ordered")
    }

    pub fn cells(&self) -> usize {
        self.mass.len()
    }

    pub fn cell_width(&self) -> f64 {
        (self.support_hi() - self.support_lo()) / self.cells() as f64
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn cell_of(&self, y: f64) -> usize {
        locate_cell(&self.edges, y)
    }

    pub fn clamp(&self, y: f64) -> f64 {
        y.clamp(self.support_lo(), self.support_hi())
    }

    fn interval(&self, a: usize, b: usize) -> Interval {
        Interval::new(self.edges[a], self.edges[b]).expect("edges are increasing")
    }

    fn mass_between(&self, a: usize, b: usize) -> f64 {
        self.cdf[b] - self.cdf[a]
    }

    /// Edge-index range `(a_max, b_min)` such that `[e_a, e_b]` contains `y`
    /// iff `a <= a_max` and `b >= b_min`.
    fn containing_edges(&self, y: f64) -> Result<(usize, usize)> {
        if !(self.support_lo() <= y && y <= self.support_hi()) {
            return Err(Error::OutOfSupport { y, lo: self.support_lo(), hi: self.support_hi() });
        }
        let a_max = self.edges.partition_point(|&e| e <= y) - 1;
        let b_min = self.edges.partition_point(|&e| e < y);
        Ok((a_max, b_min))
    }
}

/// Fits a histogram to `labels` with `cells` uniform cells. Labels are
/// jittered by `U(-tie_noise, tie_noise)` before counting.
pub fn fit_conditional_histogram(
    labels: &[f64],
    cells: usize,
    tie_noise: f64,
    seed: u64,
) -> Result<ConditionalHistogram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fit_histogram_with(labels, cells, tie_noise, &mut rng)
}

fn fit_histogram_with(
    labels: &[f64],
    cells: usize,
    tie_noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ConditionalHistogram> {
    if labels.is_empty() {
        return Err(Error::EmptyBin);
    }
    if cells < 1 {
        return Err(Error::InvalidParameter("histogram cell count must be at least 1".into()));
    }
    if !(tie_noise.is_finite() && tie_noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("tie noise must be non-negative, got {tie_noise}")));
    }
    let (lo, hi) = label_support(labels)?;
    let edges = uniform_edges(lo, hi, cells);
    let mut counts = vec![0u64; cells];
    for &y in labels {
        let jittered = if tie_noise > 0.0 { y + tie_noise * (2.0 * rng.random::<f64>() - 1.0) } else { y };
        counts[locate_cell(&edges, jittered.clamp(lo, hi))] += 1;
    }
    ConditionalHistogram::from_counts(lo, hi, &counts)
}

fn label_support(labels: &[f64]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &y in labels {
        if !y.is_finite() {
            return Err(Error::NonFiniteRecord);
        }
        lo = lo.min(y);
        hi = hi.max(y);
    }
    if lo == hi {
        let eps = DEGENERATE_HALF_WIDTH * lo.abs().max(1.0);
        lo -= eps;
        hi += eps;
    }
    Ok((lo, hi))
}

/// How the covering interval around a label is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreRule {
    /// Minimum-width edge-aligned interval with enough mass; ties go to the
    /// lowest left endpoint.
    #[default]
    Shortest,
    /// Greedy growth from the label's cell, always absorbing the heavier
    /// neighbouring cell (left on ties). Intervals are nested in `tau`.
    Nested,
}

impl ScoreRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreRule::Shortest => "shortest",
            ScoreRule::Nested => "nested",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shortest" => Some(ScoreRule::Shortest),
            "nested" => Some(ScoreRule::Nested),
            _ => None,
        }
    }

    /// Edge indices `(a, b)` of the covering interval for `y` at mass `tau`.
    fn cover_edges(self, hist: &ConditionalHistogram, tau: f64, y: f64) -> Result<(usize, usize)> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1], got {tau}")));
        }
        let (a_max, b_min) = hist.containing_edges(y)?;
        Ok(match self {
            ScoreRule::Shortest => shortest_edges(hist, tau, a_max, b_min),
            ScoreRule::Nested => nested_edges(hist, tau, a_max, b_min),
        })
    }

    pub fn cover(self, hist: &ConditionalHistogram, tau: f64, y: f64) -> Result<Interval> {
        let (a, b) = self.cover_edges(hist, tau, y)?;
        Ok(hist.interval(a, b))
    }

    /// Width of the covering interval at mass `1 - alpha`, measured in whole
    /// cells so equal cell counts give bit-identical scores.
    pub fn score(self, hist: &ConditionalHistogram, alpha: Alpha, y: f64) -> Result<f64> {
        let (a, b) = self.cover_edges(hist, alpha.coverage(), y)?;
        Ok((b - a) as f64 * hist.cell_width())
    }
}

fn enough_mass(hist: &ConditionalHistogram, a: usize, b: usize, tau: f64) -> bool {
    hist.mass_between(a, b) >= tau - MASS_TOLERANCE
}

fn shortest_edges(hist: &ConditionalHistogram, tau: f64, a_max: usize, b_min: usize) -> (usize, usize) {
    let k = hist.cells();
    let mut best: Option<(usize, usize)> = None;
    for a in 0..=a_max.min(k - 1) {
        // smallest feasible right edge for this left edge; mass is monotone in b
        let first = b_min.max(a + 1);
        let tail = &hist.cdf[first..];
        let idx = tail.partition_point(|&c| c - hist.cdf[a] < tau - MASS_TOLERANCE);
        if idx == tail.len() {
            continue;
        }
        let b = first + idx;
        if best.is_none_or(|(ba, bb)| b - a < bb - ba) {
            best = Some((a, b));
        }
    }
    best.unwrap_or((0, k))
}

fn nested_edges(hist: &ConditionalHistogram, tau: f64, a_max: usize, b_min: usize) -> (usize, usize) {
    let k = hist.cells();
    let (mut a, mut b) = if a_max < b_min {
        (a_max, b_min)
    } else if a_max == 0 {
        (0, 1)
    } else if a_max == k {
        (k - 1, k)
    } else if hist.mass[a_max - 1] >= hist.mass[a_max] {
        // y sits on an interior edge: start from the heavier adjacent cell
        (a_max - 1, a_max)
    } else {
        (a_max, a_max + 1)
    };
    while !enough_mass(hist, a, b, tau) && (a > 0 || b < k) {
        let grow_left = match (a > 0, b < k) {
            (true, true) => hist.mass[a - 1] >= hist.mass[b],
            (left, _) => left,
        };
        if grow_left {
            a -= 1;
        } else {
            b += 1;
        }
    }
    (a, b)
}

/// Shortest edge-aligned interval containing `y` with mass at least `tau`.
/// Falls back to the full support if no interval qualifies.
pub fn shortest_covering_interval(hist: &ConditionalHistogram, tau: f64, y: f64) -> Result<Interval> {
    ScoreRule::Shortest.cover(hist, tau, y)
}

/// Width of [`shortest_covering_interval`] at mass `1 - alpha`.
pub fn conformal_score_acc(hist: &ConditionalHistogram, alpha: Alpha, y: f64) -> Result<f64> {
    ScoreRule::Shortest.score(hist, alpha, y)
}

/// Hull of the cells whose midpoint score is at most `s_hat`; the full
/// support when none qualifies.
pub fn bin_interval(hist: &ConditionalHistogram, s_hat: f64, alpha: Alpha) -> Interval {
    bin_interval_with(hist, s_hat, alpha, ScoreRule::Shortest)
}

pub fn bin_interval_with(hist: &ConditionalHistogram, s_hat: f64, alpha: Alpha, rule: ScoreRule) -> Interval {
    let edges = hist.edges();
    let qualifies = |j: usize| {
        let mid = 0.5 * (edges[j] + edges[j + 1]);
        rule.score(hist, alpha, mid).map(|s| s <= s_hat).unwrap_or(false)
    };
    let k = hist.cells();
    let first = (0..k).find(|&j| qualifies(j));
    match first {
        Some(first) => {
            let last = (first..k).rev().find(|&j| qualifies(j)).unwrap_or(first);
            hist.interval(first, last + 1)
        }
        None => hist.support(),
    }
}

/// Tunables for [`calibrate_cdp_acc`].
#[derive(Debug, Clone, PartialEq)]
pub struct AccConfig {
    /// Number of prediction bins `M`.
    pub bins: usize,
    /// Histogram cells per bin `K`.
    pub hist_bins: usize,
    /// Prediction range `[L, U]`; calibration prediction min/max when unset.
    pub range: Option<(f64, f64)>,
    /// Bins with fewer labels fall back to the global residual calibration.
    pub n_min: usize,
    pub seed: u64,
    /// Tie-break jitter magnitude relative to each bin's label support width.
    pub tie_noise: f64,
    pub rule: ScoreRule,
}

impl Default for AccConfig {
    fn default() -> Self {
        Self { bins: 14, hist_bins: 63, range: None, n_min: 10, seed: 0, tie_noise: 1e-6, rule: ScoreRule::Shortest }
    }
}

/// Per-bin calibration outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct BinCalibration {
    /// Calibration labels that fell in the bin.
    pub n: usize,
    /// Threshold; `None` if the bin was too sparse to fit.
    pub s_hat: Option<f64>,
    /// Stored interval; `None` routes predictions to the fallback.
    pub interval: Option<Interval>,
}

impl BinCalibration {
    pub fn is_fallback(&self) -> bool {
        self.interval.is_none()
    }
}

/// Everything needed to produce CDP-ACC intervals at predict time.
#[derive(Debug, Clone, PartialEq)]
pub struct AccCalibration {
    pub partition: BinPartition,
    pub bins: Vec<BinCalibration>,
    pub fallback: CdpCalibration,
    pub alpha: Alpha,
    pub hist_bins: usize,
    pub n_min: usize,
    pub seed: u64,
    pub tie_noise: f64,
    pub rule: ScoreRule,
    pub bounds: Option<TargetBounds>,
}

/// Default prediction range: min/max of the calibration predictions.
pub fn prediction_range(cal: &[PredictionRecord]) -> Result<(f64, f64)> {
    if cal.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let (lo, hi) =
        cal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.y_pred), hi.max(r.y_pred)));
    if lo == hi {
        Ok((lo - 0.5, hi + 0.5))
    } else {
        Ok((lo, hi))
    }
}

pub fn calibrate_cdp_acc(
    cal: &[PredictionRecord],
    alpha: Alpha,
    config: &AccConfig,
    bounds: Option<TargetBounds>,
) -> Result<AccCalibration> {
    if cal.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if config.hist_bins < 1 {
        return Err(Error::InvalidParameter("histogram cell count must be at least 1".into()));
    }
    if !(config.tie_noise.is_finite() && config.tie_noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("tie noise must be non-negative, got {}", config.tie_noise)));
    }
    let (lower, upper) = match config.range {
        Some(r) => r,
        None => prediction_range(cal)?,
    };
    let (partition, labels) = partition_predictions(cal, lower, upper, config.bins)?;
    let fallback = calibrate_cdp(cal, alpha, bounds)?;
    let n_min = config.n_min.max(1);

    let bins = labels
        .iter()
        .enumerate()
        .map(|(m, ys)| calibrate_bin(ys, m, alpha, config, n_min, bounds))
        .collect::<Result<Vec<_>>>()?;

    Ok(AccCalibration {
        partition,
        bins,
        fallback,
        alpha,
        hist_bins: config.hist_bins,
        n_min,
        seed: config.seed,
        tie_noise: config.tie_noise,
        rule: config.rule,
        bounds,
    })
}

fn calibrate_bin(
    labels: &[f64],
    m: usize,
    alpha: Alpha,
    config: &AccConfig,
    n_min: usize,
    bounds: Option<TargetBounds>,
) -> Result<BinCalibration> {
    let n = labels.len();
    if n < n_min {
        return Ok(BinCalibration { n, s_hat: None, interval: None });
    }
    let (lo, hi) = label_support(labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(m as u64);
    let hist = fit_histogram_with(labels, config.hist_bins, config.tie_noise * (hi - lo), &mut rng)?;
    let scores = labels.iter().map(|&y| config.rule.score(&hist, alpha, hist.clamp(y))).collect::<Result<Vec<_>>>()?;
    let s_hat = conformal_quantile(&scores, alpha)?;
    let interval =
        s_hat.is_finite().then(|| clip_interval(bin_interval_with(&hist, s_hat, alpha, config.rule), bounds));
    Ok(BinCalibration { n, s_hat: Some(s_hat), interval })
}

/// Looks up the stored interval of `y_hat`'s bin; fallback bins return the
/// global residual interval around `y_hat`.
pub fn predict_cdp_acc(y_hat: f64, calib: &AccCalibration) -> Result<Interval> {
    if !y_hat.is_finite() {
        return Err(Error::NonFiniteRecord);
    }
    let m = calib.partition.bin_of(y_hat);
    match calib.bins[m].interval {
        Some(iv) => Ok(iv),
        None => predict_cdp(y_hat, &calib.fallback),
    }
}

impl AccCalibration {
    pub fn predict(&self, y_hat: f64) -> Result<Interval> {
        predict_cdp_acc(y_hat, self)
    }

    pub fn bin_of(&self, y_hat: f64) -> usize {
        self.partition.bin_of(y_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn rec(y_pred: f64, y_true: f64) -> PredictionRecord {
        PredictionRecord::new(y_true, y_pred).unwrap()
    }

    /// Exhaustive search over all edge pairs.
    fn enumerate_shortest(hist: &ConditionalHistogram, tau: f64, y: f64) -> Interval {
        let e = hist.edges();
        let k = hist.cells();
        let mut best: Option<(usize, usize)> = None;
        for a in 0..=k {
            for b in a + 1..=k {
                let contains = e[a] <= y && y <= e[b];
                let mass = hist.cdf()[b] - hist.cdf()[a];
                if contains && mass >= tau - MASS_TOLERANCE {
                    let better = match best {
                        None => true,
                        Some((ba, bb)) => b - a < bb - ba || (b - a == bb - ba && a < ba),
                    };
                    if better {
                        best = Some((a, b));
                    }
                }
            }
        }
        let (a, b) = best.unwrap_or((0, k));
        iv(e[a], e[b])
    }

    #[test]
    fn partition_edge_rule() {
        let cal = [rec(4.5, 1.0), rec(63.0, 2.0), rec(-1.0, 3.0), rec(4.49, 4.0)];
        let (p, labels) = partition_predictions(&cal, 0.0, 63.0, 14).unwrap();
        assert_eq!(p.edges()[1], 4.5);
        assert_eq!(p.edges()[2], 9.0);
        assert_eq!(p.edges()[14], 63.0);
        assert_eq!(p.bin_of(4.5), 1);
        assert_eq!(p.bin_of(63.0), 13);
        assert_eq!(p.bin_of(-1.0), 0);
        assert_eq!(p.bin_of(6.0), 1);
        assert_eq!(p.bin_of(80.0), 13);
        assert_eq!(labels[0], vec![3.0, 4.0]);
        assert_eq!(labels[1], vec![1.0]);
        assert_eq!(labels[13], vec![2.0]);
    }

    #[test]
    fn partition_rejects_bad_input() {
        let cal = [rec(1.0, 1.0)];
        assert!(matches!(partition_predictions(&cal, 5.0, 5.0, 3), Err(Error::InvalidPartition(_))));
        assert!(matches!(partition_predictions(&cal, 0.0, 5.0, 0), Err(Error::InvalidPartition(_))));
        assert_eq!(partition_predictions(&[], 0.0, 5.0, 2), Err(Error::EmptyCalibration));
    }

    #[test]
    fn histogram_uniform_counts() {
        let h = fit_conditional_histogram(&[0.0, 1.0, 2.0, 3.0], 4, 0.0, 1).unwrap();
        assert_eq!((h.support_lo(), h.support_hi()), (0.0, 3.0));
        assert_eq!(h.mass(), &[0.25; 4]);
        assert_eq!(h.cdf(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn histogram_degenerate_support() {
        let h = fit_conditional_histogram(&[2.0, 2.0, 2.0], 4, 1e-9, 3).unwrap();
        assert!(h.support_lo() < 2.0 && h.support_hi() > 2.0);
        assert_eq!(h.mass()[0] + h.mass()[3], 0.0);
        assert_eq!(h.mass()[1] + h.mass()[2], 1.0);
        assert_eq!(h.cdf()[4], 1.0);
    }

    #[test]
    fn histogram_rejects_empty() {
        assert_eq!(fit_conditional_histogram(&[], 4, 0.0, 0), Err(Error::EmptyBin));
    }

    #[test]
    fn histogram_noise_is_seeded() {
        let labels: Vec<f64> = (0..50).map(|i| f64::from(i % 7)).collect();
        let a = fit_conditional_histogram(&labels, 7, 0.01, 11).unwrap();
        let b = fit_conditional_histogram(&labels, 7, 0.01, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shortest_examples() {
        let h = ConditionalHistogram::from_counts(0.0, 4.0, &[8, 1, 8, 3]).unwrap();
        assert_eq!(shortest_covering_interval(&h, 0.4, 0.5).unwrap(), iv(0.0, 1.0));

        let u = ConditionalHistogram::from_counts(0.0, 10.0, &[1; 10]).unwrap();
        assert_eq!(shortest_covering_interval(&u, 0.5, 5.0).unwrap(), iv(0.0, 5.0));
        assert_eq!(conformal_score_acc(&u, alpha(0.5), 5.0).unwrap(), 5.0);

        let spike = ConditionalHistogram::from_counts(0.0, 5.0, &[0, 0, 7, 0, 0]).unwrap();
        for tau in [0.1, 0.5, 1.0] {
            assert_eq!(shortest_covering_interval(&spike, tau, 2.5).unwrap(), iv(2.0, 3.0));
        }
        assert_eq!(conformal_score_acc(&spike, alpha(0.05), 2.2).unwrap(), 1.0);
    }

    #[test]
    fn shortest_out_of_support() {
        let h = ConditionalHistogram::from_counts(0.0, 4.0, &[1, 1, 1, 1]).unwrap();
        assert!(matches!(shortest_covering_interval(&h, 0.5, 4.5), Err(Error::OutOfSupport { .. })));
    }

    #[test]
    fn score_symmetric_two_cell() {
        let h = ConditionalHistogram::from_counts(0.0, 2.0, &[5, 5]).unwrap();
        let s = conformal_score_acc(&h, alpha(0.1), 0.1).unwrap();
        for y in [0.0, 0.3, 0.7, 0.99] {
            assert_eq!(conformal_score_acc(&h, alpha(0.1), y).unwrap(), s);
        }
    }

    #[test]
    fn shortest_rule_is_not_nested() {
        let h = ConditionalHistogram::from_counts(0.0, 4.0, &[6, 4, 1, 9]).unwrap();
        assert_eq!(shortest_covering_interval(&h, 0.5, 1.5).unwrap(), iv(0.0, 2.0));
        assert_eq!(shortest_covering_interval(&h, 0.7, 1.5).unwrap(), iv(1.0, 4.0));
        let small = ScoreRule::Nested.cover(&h, 0.5, 1.5).unwrap();
        let large = ScoreRule::Nested.cover(&h, 0.7, 1.5).unwrap();
        assert!(large.lo() <= small.lo() && small.hi() <= large.hi());
    }

    #[test]
    fn bin_interval_examples() {
        let h = ConditionalHistogram::from_counts(0.0, 4.0, &[8, 1, 8, 3]).unwrap();
        assert_eq!(bin_interval(&h, 3.0, alpha(0.2)), iv(0.0, 3.0));

        let u = ConditionalHistogram::from_counts(0.0, 10.0, &[1; 10]).unwrap();
        assert_eq!(bin_interval(&u, 10.0, alpha(0.1)), iv(0.0, 10.0));
        assert_eq!(bin_interval(&u, 0.5, alpha(0.1)), iv(0.0, 10.0));
    }

    #[test]
    fn single_bin_reduces_to_global_histogram() {
        let cal: Vec<_> = (0..60).map(|i| rec(f64::from(i % 13), f64::from((i * 7) % 23))).collect();
        let cfg = AccConfig { bins: 1, hist_bins: 8, tie_noise: 0.0, ..AccConfig::default() };
        let a = alpha(0.1);
        let c = calibrate_cdp_acc(&cal, a, &cfg, None).unwrap();
        let labels: Vec<f64> = cal.iter().map(|r| r.y_true).collect();
        let h = fit_conditional_histogram(&labels, 8, 0.0, 0).unwrap();
        let scores: Vec<f64> = labels.iter().map(|&y| conformal_score_acc(&h, a, y).unwrap()).collect();
        let s_hat = conformal_quantile(&scores, a).unwrap();
        assert_eq!(c.bins.len(), 1);
        assert_eq!(c.bins[0].interval, Some(bin_interval(&h, s_hat, a)));
        assert_eq!(c.predict(5.0).unwrap(), bin_interval(&h, s_hat, a));
    }

    #[test]
    fn sparse_bins_fall_back_to_cdp() {
        // all predictions in the lower half of [0, 10]
        let cal: Vec<_> = (0..40).map(|i| rec(f64::from(i % 5), f64::from(i % 5) + 0.5)).collect();
        let cfg = AccConfig { bins: 2, hist_bins: 4, range: Some((0.0, 10.0)), ..AccConfig::default() };
        let c = calibrate_cdp_acc(&cal, alpha(0.1), &cfg, None).unwrap();
        assert_eq!(c.bins[1].n, 0);
        assert!(c.bins[1].is_fallback());
        assert!(!c.bins[0].is_fallback());
        let y_hat = 7.0;
        let got = c.predict(y_hat).unwrap();
        assert_eq!(got, predict_cdp(y_hat, &c.fallback).unwrap());
        assert!((0.5 * (got.lo() + got.hi()) - y_hat).abs() < 1e-12);
    }

    #[test]
    fn calibration_is_deterministic() {
        let cal: Vec<_> = (0..300)
            .map(|i| {
                let x = f64::from(i) * 0.21 % 63.0;
                rec(x, x + f64::from(i % 9) - 4.0)
            })
            .collect();
        let cfg = AccConfig { seed: 5, ..AccConfig::default() };
        let a = calibrate_cdp_acc(&cal, alpha(0.1), &cfg, Some(TargetBounds::bdi())).unwrap();
        let b = calibrate_cdp_acc(&cal, alpha(0.1), &cfg, Some(TargetBounds::bdi())).unwrap();
        assert_eq!(a, b);
    }

    fn arb_hist() -> impl Strategy<Value = ConditionalHistogram> {
        (prop::collection::vec(0u64..6, 1..=32), -10.0f64..10.0, 0.5f64..30.0)
            .prop_filter("needs mass", |(c, _, _)| c.iter().any(|&x| x > 0))
            .prop_map(|(counts, lo, w)| ConditionalHistogram::from_counts(lo, lo + w, &counts).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn shortest_matches_enumeration(
            h in arb_hist(),
            tau in prop::sample::select(vec![0.5, 0.8, 0.9, 0.95]),
            u in 0.0f64..=1.0,
            on_edge in any::<bool>(),
        ) {
            let y = if on_edge {
                h.edges()[(u * h.cells() as f64) as usize]
            } else {
                h.support_lo() + u * (h.support_hi() - h.support_lo())
            };
            prop_assert_eq!(shortest_covering_interval(&h, tau, y).unwrap(), enumerate_shortest(&h, tau, y));
        }

        #[test]
        fn score_monotone_in_coverage(h in arb_hist(), u in 0.0f64..=1.0, a1 in 0.01f64..0.99, a2 in 0.01f64..0.99) {
            let y = h.support_lo() + u * (h.support_hi() - h.support_lo());
            let (small, large) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let wide = conformal_score_acc(&h, alpha(small), y).unwrap();
            let narrow = conformal_score_acc(&h, alpha(large), y).unwrap();
            prop_assert!(narrow <= wide);
        }

        #[test]
        fn nested_rule_is_nested(h in arb_hist(), u in 0.0f64..=1.0, t1 in 0.05f64..1.0, t2 in 0.05f64..1.0) {
            let y = h.support_lo() + u * (h.support_hi() - h.support_lo());
            let (lo_t, hi_t) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let inner = ScoreRule::Nested.cover(&h, lo_t, y).unwrap();
            let outer = ScoreRule::Nested.cover(&h, hi_t, y).unwrap();
            prop_assert!(outer.lo() <= inner.lo() && inner.hi() <= outer.hi());
            prop_assert!(inner.contains(y));
        }

        #[test]
        fn cdf_is_normalised(labels in prop::collection::vec(-100.0f64..100.0, 1..200), k in 1usize..40, seed in any::<u64>()) {
            let h = fit_conditional_histogram(&labels, k, 1e-3, seed).unwrap();
            let cdf = h.cdf();
            prop_assert_eq!(cdf[0], 0.0);
            prop_assert_eq!(cdf[k], 1.0);
            prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn bin_interval_contains_qualifying_labels(
            labels in prop::collection::vec(0.0f64..20.0, 10..120),
            k in 2usize..24,
            alpha_pct in 5u32..40,
        ) {
            let a = alpha(f64::from(alpha_pct) / 100.0);
            let h = fit_conditional_histogram(&labels, k, 0.0, 0).unwrap();
            let scores: Vec<f64> = labels.iter().map(|&y| conformal_score_acc(&h, a, y).unwrap()).collect();
            let s_hat = conformal_quantile(&scores, a).unwrap();
            prop_assume!(s_hat.is_finite());
            let out = bin_interval(&h, s_hat, a);
            for (&y, &s) in labels.iter().zip(&scores) {
                if s <= s_hat {
                    prop_assert!(out.contains(y), "y={} s={} s_hat={} out={}", y, s, s_hat, out);
                }
            }
        }
    }
}
