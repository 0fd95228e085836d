//! Run configuration: flag/file merging and validation.
//!
//! Everything here is validated before any input file is opened.

use std::path::{Path, PathBuf};

use cdp_core::io::{ReportFormat, SchemaKind};
use cdp_core::synth::{Family, FamilyParams, ScenarioSpec};
use cdp_core::{Alpha, ScoreRule, TargetBounds};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Cdp,
    CdpAcc,
    Cqr,
    Gaussian,
    Qr,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Cdp, Method::CdpAcc, Method::Cqr, Method::Gaussian, Method::Qr];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cdp => "cdp",
            Method::CdpAcc => "cdp-acc",
            Method::Cqr => "cqr",
            Method::Gaussian => "gaussian",
            Method::Qr => "qr",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            CliError::Validation(format!("unknown method {s:?}; expected cdp, cdp-acc, cqr, qr or gaussian"))
        })
    }

    /// The only prediction-file layout each method consumes.
    pub fn schema(self) -> SchemaKind {
        match self {
            Method::Cdp | Method::CdpAcc => SchemaKind::Point,
            Method::Cqr | Method::Qr => SchemaKind::Quantile,
            Method::Gaussian => SchemaKind::Gaussian,
        }
    }
}

/// Where calibration and test records come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files {
        cal: PathBuf,
        test: PathBuf,
    },
    Scenario {
        spec: ScenarioSpec,
        n_cal: usize,
        n_test: usize,
        /// Scales the synthetic quantile band or sigma for the quantile and
        /// gaussian views.
        width_scale: f64,
    },
}

impl DataSource {
    pub fn describe(&self) -> String {
        match self {
            DataSource::Files { cal, test } => format!("cal={} test={}", cal.display(), test.display()),
            DataSource::Scenario { spec, n_cal, n_test, width_scale } => format!(
                "scenario={} family={} seed={} n_cal={n_cal} n_test={n_test} width_scale={width_scale}",
                spec.name,
                spec.family.as_str(),
                spec.seed
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub alpha: Alpha,
    pub data: DataSource,
    pub schema: SchemaKind,
    /// Prediction bins `M` (cdp-acc).
    pub bins: usize,
    /// Histogram cells `K` (cdp-acc).
    pub hist_bins: usize,
    /// Prediction range `[L, U]` (cdp-acc); calibration min/max when unset.
    pub range: Option<(f64, f64)>,
    pub bounds: Option<TargetBounds>,
    /// BDI-II setup: bounds and range `[0, 63]`, severity strata for SSC.
    pub bdi: bool,
    pub n_min: usize,
    pub seed: u64,
    pub tie_noise: f64,
    pub rule: ScoreRule,
    pub out: PathBuf,
    pub format: ReportFormat,
}

/// Unvalidated settings, from flags or a TOML file. Unset fields take the
/// defaults applied in [`RawConfig::resolve`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RawConfig {
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub cal: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub schema: Option<String>,
    pub bins: Option<usize>,
    pub hist_bins: Option<usize>,
    pub bounds: Option<String>,
    pub range: Option<String>,
    pub bdi: Option<bool>,
    pub n_min: Option<usize>,
    pub seed: Option<u64>,
    pub tie_noise: Option<f64>,
    pub rule: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub scenario: Option<ScenarioField>,
    pub n_cal: Option<usize>,
    pub n_test: Option<usize>,
    pub width_scale: Option<f64>,
}

/// `scenario = "name"` or a `[scenario]` table describing a custom one.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScenarioField {
    Named(String),
    Custom(CustomScenario),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CustomScenario {
    pub name: Option<String>,
    pub family: String,
    #[serde(default)]
    pub base_spread: f64,
    #[serde(default)]
    pub spread_slope: f64,
    #[serde(default)]
    pub mixture_gap: f64,
    #[serde(default)]
    pub skew_rate: f64,
    pub range: Option<[f64; 2]>,
}

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BINS: usize = 14;
pub const DEFAULT_HIST_BINS: usize = 63;
pub const DEFAULT_N_MIN: usize = 10;
pub const DEFAULT_N_CAL: usize = 1000;
pub const DEFAULT_N_TEST: usize = 5000;

macro_rules! overlay {
    ($dst:ident, $src:ident: $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RawConfig {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `other` replace ours.
    pub fn overlay(mut self, other: &RawConfig) -> Self {
        overlay!(self, other: method, alpha, cal, test, schema, bins, hist_bins, bounds, range, bdi,
            n_min, seed, tie_noise, rule, out, format, scenario, n_cal, n_test, width_scale);
        self
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        let method = Method::parse(self.method.as_deref().unwrap_or("cdp"))?;
        let alpha_value = self.alpha.unwrap_or(DEFAULT_ALPHA);
        let alpha = Alpha::new(alpha_value).map_err(|_| {
            CliError::Validation(format!("--alpha must lie strictly between 0 and 1, got {alpha_value}"))
        })?;

        let schema = match &self.schema {
            Some(s) => {
                let kind = SchemaKind::parse(s).ok_or_else(|| {
                    CliError::Validation(format!("unknown schema {s:?}; expected point, quantile or gaussian"))
                })?;
                if kind != method.schema() {
                    return Err(CliError::Validation(format!(
                        "method {} needs --schema {}, got {s}",
                        method.as_str(),
                        method.schema().as_str()
                    )));
                }
                kind
            }
            None => method.schema(),
        };

        let bdi = self.bdi.unwrap_or(false);
        let bounds = match &self.bounds {
            Some(s) => {
                let (lo, hi) = parse_pair("--bounds", s)?;
                Some(TargetBounds::new(lo, hi).map_err(|e| CliError::Validation(format!("--bounds: {e}")))?)
            }
            None if bdi => Some(TargetBounds::bdi()),
            None => None,
        };
        let range = match &self.range {
            Some(s) => {
                let (lo, hi) = parse_pair("--range", s)?;
                if lo >= hi {
                    return Err(CliError::Validation(format!("--range lower {lo} must be below upper {hi}")));
                }
                Some((lo, hi))
            }
            None if bdi => Some((0.0, 63.0)),
            None => None,
        };

        let bins = self.bins.unwrap_or(DEFAULT_BINS);
        let hist_bins = self.hist_bins.unwrap_or(DEFAULT_HIST_BINS);
        if method == Method::CdpAcc {
            if bins < 1 {
                return Err(CliError::Validation("--bins must be at least 1".into()));
            }
            if hist_bins < 1 {
                return Err(CliError::Validation("--hist-bins must be at least 1".into()));
            }
        }
        let tie_noise = self.tie_noise.unwrap_or(1e-6);
        if !(tie_noise.is_finite() && tie_noise >= 0.0) {
            return Err(CliError::Validation(format!("--tie-noise must be non-negative, got {tie_noise}")));
        }
        let rule = match &self.rule {
            Some(s) => ScoreRule::parse(s)
                .ok_or_else(|| CliError::Validation(format!("unknown rule {s:?}; expected shortest or nested")))?,
            None => ScoreRule::Shortest,
        };
        let format = match &self.format {
            Some(s) => ReportFormat::parse(s)
                .ok_or_else(|| CliError::Validation(format!("unknown format {s:?}; expected csv or markdown")))?,
            None => ReportFormat::Csv,
        };
        let seed = self.seed.unwrap_or(0);
        let data = self.resolve_data(seed)?;

        Ok(RunConfig {
            method,
            alpha,
            data,
            schema,
            bins,
            hist_bins,
            range,
            bounds,
            bdi,
            n_min: self.n_min.unwrap_or(DEFAULT_N_MIN),
            seed,
            tie_noise,
            rule,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            format,
        })
    }

    fn resolve_data(&self, seed: u64) -> CliResult<DataSource> {
        match (&self.scenario, &self.cal, &self.test) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                Err(CliError::Validation("--scenario cannot be combined with --cal/--test".into()))
            }
            (Some(field), None, None) => {
                let n_cal = self.n_cal.unwrap_or(DEFAULT_N_CAL);
                let n_test = self.n_test.unwrap_or(DEFAULT_N_TEST);
                if n_cal < 1 || n_test < 1 {
                    return Err(CliError::Validation("--n-cal and --n-test must be at least 1".into()));
                }
                let width_scale = self.width_scale.unwrap_or(1.0);
                if !(width_scale.is_finite() && width_scale >= 0.0) {
                    return Err(CliError::Validation(format!("--width-scale must be non-negative, got {width_scale}")));
                }
                let n = n_cal + n_test;
                let spec = match field {
                    ScenarioField::Named(name) => {
                        ScenarioSpec::named(name, n, seed).map_err(|e| CliError::Validation(e.to_string()))?
                    }
                    ScenarioField::Custom(c) => custom_spec(c, n, seed)?,
                };
                Ok(DataSource::Scenario { spec, n_cal, n_test, width_scale })
            }
            (None, Some(cal), Some(test)) => Ok(DataSource::Files { cal: cal.clone(), test: test.clone() }),
            (None, _, _) => Err(CliError::Validation("pass both --cal and --test, or --scenario".into())),
        }
    }
}

fn custom_spec(c: &CustomScenario, n: usize, seed: u64) -> CliResult<ScenarioSpec> {
    let family = Family::parse(&c.family).ok_or_else(|| {
        CliError::Validation(format!(
            "unknown scenario family {:?}; expected homoscedastic-gaussian, heteroscedastic-gaussian, bimodal or imbalanced-skew",
            c.family
        ))
    })?;
    let range = match c.range {
        Some([lo, hi]) => {
            TargetBounds::new(lo, hi).map_err(|e| CliError::Validation(format!("scenario range: {e}")))?
        }
        None => TargetBounds::bdi(),
    };
    let spec = ScenarioSpec {
        name: c.name.clone().unwrap_or_else(|| format!("custom-{}", family.as_str())),
        n,
        seed,
        family,
        params: FamilyParams {
            base_spread: c.base_spread,
            spread_slope: c.spread_slope,
            mixture_gap: c.mixture_gap,
            skew_rate: c.skew_rate,
        },
        range,
    };
    spec.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(spec)
}

fn parse_pair(flag: &str, s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Validation(format!("{flag} expects LO,HI, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}
