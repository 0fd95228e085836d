//! Seeded synthetic `(y_hat, y)` generators.
//!
//! Every scenario draws from `ChaCha8Rng` seeded with the scenario seed;
//! normal and exponential variates come from `rand_distr`'s ziggurat
//! samplers. Labels are clipped to the scenario range.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_quantile};
use crate::types::{Alpha, GaussianPredictionRecord, PredictionRecord, QuantilePredictionRecord, TargetBounds};

/// Identifier of the generator used for scenarios and splits, echoed in
/// report headers.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.9, rand_distr 0.5 ziggurat)";

/// Conditional law of `y` given `y_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `y = y_hat + base * e`
    HomoscedasticGaussian,
    /// `y = y_hat + (base + slope * (y_hat - min)) * e`
    HeteroscedasticGaussian,
    /// `y = y_hat +/- gap/2 + base * e`, sign uniform
    Bimodal,
    /// `y_hat` exponentially tilted toward the low end of the range,
    /// `y = y_hat + sigma(y_hat) * (E - 1)` with `E ~ Exp(1)`
    ImbalancedSkew,
}

impl Family {
    pub const ALL: [Family; 4] =
        [Family::HomoscedasticGaussian, Family::HeteroscedasticGaussian, Family::Bimodal, Family::ImbalancedSkew];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::HomoscedasticGaussian => "homoscedastic-gaussian",
            Family::HeteroscedasticGaussian => "heteroscedastic-gaussian",
            Family::Bimodal => "bimodal",
            Family::ImbalancedSkew => "imbalanced-skew",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FamilyParams {
    pub base_spread: f64,
    pub spread_slope: f64,
    pub mixture_gap: f64,
    pub skew_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub family: Family,
    pub params: FamilyParams,
    pub range: TargetBounds,
}

/// Names accepted by [`ScenarioSpec::named`].
pub const SCENARIOS: [&str; 4] = ["homoscedastic-v1", "heteroscedastic-v1", "bimodal-v1", "imbalanced-skew-v1"];

impl ScenarioSpec {
    /// Preset scenarios on the BDI-II range `[0, 63]`.
    pub fn named(name: &str, n: usize, seed: u64) -> Result<Self> {
        let (family, params) = match name {
            "homoscedastic-v1" => {
                (Family::HomoscedasticGaussian, FamilyParams { base_spread: 3.0, ..Default::default() })
            }
            "heteroscedastic-v1" => (
                Family::HeteroscedasticGaussian,
                FamilyParams { base_spread: 1.0, spread_slope: 0.2, ..Default::default() },
            ),
            "bimodal-v1" => {
                (Family::Bimodal, FamilyParams { base_spread: 1.5, mixture_gap: 10.0, ..Default::default() })
            }
            "imbalanced-skew-v1" => (
                Family::ImbalancedSkew,
                FamilyParams { base_spread: 1.0, spread_slope: 0.2, skew_rate: 0.05, ..Default::default() },
            ),
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown scenario {other:?}; expected one of {}",
                    SCENARIOS.join(", ")
                )))
            }
        };
        let spec = Self { name: name.to_string(), n, seed, family, params, range: TargetBounds::bdi() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("n must be at least 2, got {}", self.n)));
        }
        let p = &self.params;
        for (label, v) in [
            ("base_spread", p.base_spread),
            ("spread_slope", p.spread_slope),
            ("mixture_gap", p.mixture_gap),
            ("skew_rate", p.skew_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSpec(format!("{label} must be finite and non-negative, got {v}")));
            }
        }
        if self.family == Family::ImbalancedSkew && p.skew_rate == 0.0 {
            return Err(Error::InvalidSpec("imbalanced-skew needs a positive skew_rate".into()));
        }
        Ok(())
    }

    /// Residual scale at `y_hat` (standard deviation of each mixture
    /// component for the bimodal family).
    pub fn spread(&self, y_hat: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::HomoscedasticGaussian | Family::Bimodal => p.base_spread,
            Family::HeteroscedasticGaussian | Family::ImbalancedSkew => {
                p.base_spread + p.spread_slope * (y_hat - self.range.min())
            }
        }
    }

    /// Standard deviation of the unclipped residual `y - y_hat`.
    pub fn conditional_sd(&self, y_hat: f64) -> f64 {
        let s = self.spread(y_hat);
        match self.family {
            Family::Bimodal => (s * s + 0.25 * self.params.mixture_gap.powi(2)).sqrt(),
            _ => s,
        }
    }

    /// `q`-quantile of the clipped label given `y_hat`.
    pub fn conditional_quantile(&self, y_hat: f64, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level must be in (0, 1), got {q}")));
        }
        let s = self.spread(y_hat);
        let raw = match self.family {
            Family::HomoscedasticGaussian | Family::HeteroscedasticGaussian => y_hat + s * normal_quantile(q)?,
            Family::ImbalancedSkew => y_hat + s * (-(1.0 - q).ln() - 1.0),
            Family::Bimodal => {
                let half = 0.5 * self.params.mixture_gap;
                let cdf = |y: f64| {
                    if s == 0.0 {
                        0.5 * (f64::from(u8::from(y >= y_hat - half)) + f64::from(u8::from(y >= y_hat + half)))
                    } else {
                        0.5 * (normal_cdf((y - y_hat + half) / s) + normal_cdf((y - y_hat - half) / s))
                    }
                };
                let span = half + 12.0 * s + 1.0;
                let (mut lo, mut hi) = (y_hat - span, y_hat + span);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if cdf(mid) < q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        Ok(self.range.clamp(raw))
    }

    fn draw_prediction(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = (self.range.min(), self.range.max());
        let u: f64 = rng.random();
        match self.family {
            Family::ImbalancedSkew => {
                // inverse CDF of an exponential truncated to [lo, hi]
                let rate = self.params.skew_rate;
                let tail = (-rate * (hi - lo)).exp();
                (lo - (1.0 - u * (1.0 - tail)).ln() / rate).min(hi)
            }
            _ => lo + u * (hi - lo),
        }
    }

    fn draw_label(&self, y_hat: f64, rng: &mut ChaCha8Rng) -> f64 {
        let s = self.spread(y_hat);
        let y = match self.family {
            Family::HomoscedasticGaussian | Family::HeteroscedasticGaussian => {
                let e: f64 = rng.sample(StandardNormal);
                y_hat + s * e
            }
            Family::Bimodal => {
                let half = 0.5 * self.params.mixture_gap;
                let shift = if rng.random::<bool>() { half } else { -half };
                let e: f64 = rng.sample(StandardNormal);
                y_hat + shift + s * e
            }
            Family::ImbalancedSkew => {
                let e: f64 = rng.sample(Exp1);
                y_hat + s * (e - 1.0)
            }
        };
        self.range.clamp(y)
    }
}

/// Draws `spec.n` records. Identical specs give identical output.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Vec<PredictionRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n)
        .map(|_| {
            let y_hat = spec.draw_prediction(&mut rng);
            let y = spec.draw_label(y_hat, &mut rng);
            PredictionRecord::new(y, y_hat)
        })
        .collect()
}

/// Quantile-regressor view of `records`: the true conditional `alpha/2` and
/// `1 - alpha/2` quantiles, scaled about the conditional median by
/// `width_scale` (`0.5` gives a band half as wide as it should be).
pub fn quantile_records(
    spec: &ScenarioSpec,
    records: &[PredictionRecord],
    alpha: Alpha,
    width_scale: f64,
) -> Result<Vec<QuantilePredictionRecord>> {
    if !(width_scale.is_finite() && width_scale >= 0.0) {
        return Err(Error::InvalidParameter(format!("width scale must be non-negative, got {width_scale}")));
    }
    let tail = 0.5 * alpha.value();
    records
        .iter()
        .map(|r| {
            let lo = spec.conditional_quantile(r.y_pred, tail)?;
            let hi = spec.conditional_quantile(r.y_pred, 1.0 - tail)?;
            let med = spec.conditional_quantile(r.y_pred, 0.5)?;
            QuantilePredictionRecord::new(r.y_true, med - width_scale * (med - lo), med + width_scale * (hi - med))
        })
        .collect()
}

/// Mean/variance-regressor view of `records` with the true conditional
/// spread multiplied by `sigma_scale`.
pub fn gaussian_records(
    spec: &ScenarioSpec,
    records: &[PredictionRecord],
    sigma_scale: f64,
) -> Result<Vec<GaussianPredictionRecord>> {
    if !(sigma_scale.is_finite() && sigma_scale >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma scale must be non-negative, got {sigma_scale}")));
    }
    records
        .iter()
        .map(|r| GaussianPredictionRecord::new(r.y_true, r.y_pred, sigma_scale * spec.conditional_sd(r.y_pred)))
        .collect()
}

/// Seeded shuffle, then the first `round(frac_cal * n)` items become the
/// calibration set.
pub fn exchangeable_split<T: Clone>(records: &[T], frac_cal: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(frac_cal > 0.0 && frac_cal < 1.0) {
        return Err(Error::InvalidFraction(frac_cal));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_cal = ((frac_cal * records.len() as f64).round() as usize).min(records.len());
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..n_cal]), pick(&order[n_cal..])))
}
