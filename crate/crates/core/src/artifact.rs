//! Versioned key-value text format for frozen calibrations.
//!
//! One `key = value` pair per line, `#` starts a comment. Reals use the
//! shortest round-trip decimal form (`inf` for the unbounded threshold), so
//! parsing a written artifact reproduces it exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::acc::{AccCalibration, BinCalibration, BinPartition, ScoreRule, TIE_NOISE_RNG};
use crate::baselines::CqrCalibration;
use crate::cdp::CdpCalibration;
use crate::types::{Alpha, Interval, TargetBounds};

pub const FORMAT_NAME: &str = "cdp-calibration";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArtifactError {
    #[error("not a calibration artifact (format = {0:?})")]
    WrongFormat(String),
    #[error("unsupported schema version {found}; this build reads version {SCHEMA_VERSION}")]
    UnsupportedVersion { found: String },
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("invalid value {value:?} for key {key:?}")]
    InvalidValue { key: String, value: String },
    #[error("line {0} is not a key = value pair")]
    BadLine(usize),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
}

/// State needed at predict time for any supported method.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationArtifact {
    Cdp(CdpCalibration),
    Cqr(CqrCalibration),
    CdpAcc(AccCalibration),
    Gaussian { alpha: Alpha, bounds: Option<TargetBounds> },
    Qr { bounds: Option<TargetBounds> },
}

impl CalibrationArtifact {
    pub fn method(&self) -> &'static str {
        match self {
            CalibrationArtifact::Cdp(_) => "cdp",
            CalibrationArtifact::Cqr(_) => "cqr",
            CalibrationArtifact::CdpAcc(_) => "cdp-acc",
            CalibrationArtifact::Gaussian { .. } => "gaussian",
            CalibrationArtifact::Qr { .. } => "qr",
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        };
        put("format", FORMAT_NAME.into());
        put("schema_version", SCHEMA_VERSION.to_string());
        put("method", self.method().into());
        match self {
            CalibrationArtifact::Cdp(c) => {
                put("alpha", c.alpha.to_string());
                put("bounds", bounds_text(c.bounds));
                put("n_cal", c.n_cal.to_string());
                put("s_hat", c.s_hat.to_string());
            }
            CalibrationArtifact::Cqr(c) => {
                put("alpha", c.alpha.to_string());
                put("bounds", bounds_text(c.bounds));
                put("n_cal", c.n_cal.to_string());
                put("s_hat", c.s_hat.to_string());
            }
            CalibrationArtifact::Gaussian { alpha, bounds } => {
                put("alpha", alpha.to_string());
                put("bounds", bounds_text(*bounds));
            }
            CalibrationArtifact::Qr { bounds } => {
                put("bounds", bounds_text(*bounds));
            }
            CalibrationArtifact::CdpAcc(c) => {
                put("alpha", c.alpha.to_string());
                put("bounds", bounds_text(c.bounds));
                put("bins", c.partition.bins().to_string());
                put("range", format!("{},{}", c.partition.lower(), c.partition.upper()));
                put("hist_bins", c.hist_bins.to_string());
                put("n_min", c.n_min.to_string());
                put("seed", c.seed.to_string());
                put("tie_noise", c.tie_noise.to_string());
                put("tie_noise_rng", TIE_NOISE_RNG.into());
                put("rule", c.rule.as_str().into());
                put("fallback.n_cal", c.fallback.n_cal.to_string());
                put("fallback.s_hat", c.fallback.s_hat.to_string());
                for (m, bin) in c.bins.iter().enumerate() {
                    let s_hat = bin.s_hat.map_or_else(|| "none".to_string(), |s| s.to_string());
                    let iv =
                        bin.interval.map_or_else(|| "fallback".to_string(), |iv| format!("{},{}", iv.lo(), iv.hi()));
                    put(&format!("bin.{m}"), format!("n={} s_hat={s_hat} interval={iv}", bin.n));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ArtifactError> {
        let kv = Fields::parse(text)?;
        let format = kv.get("format")?;
        if format != FORMAT_NAME {
            return Err(ArtifactError::WrongFormat(format.into()));
        }
        let version = kv.get("schema_version")?;
        if version.parse::<u32>().ok() != Some(SCHEMA_VERSION) {
            return Err(ArtifactError::UnsupportedVersion { found: version.into() });
        }
        let bounds = kv.parse_with("bounds", parse_bounds)?;
        let method = kv.get("method")?;
        Ok(match method {
            "cdp" => CalibrationArtifact::Cdp(CdpCalibration {
                s_hat: kv.parse_with("s_hat", parse_f64)?,
                n_cal: kv.parse_with("n_cal", |v| v.parse().ok())?,
                alpha: kv.parse_with("alpha", parse_alpha)?,
                bounds,
            }),
            "cqr" => CalibrationArtifact::Cqr(CqrCalibration {
                s_hat: kv.parse_with("s_hat", parse_f64)?,
                n_cal: kv.parse_with("n_cal", |v| v.parse().ok())?,
                alpha: kv.parse_with("alpha", parse_alpha)?,
                bounds,
            }),
            "gaussian" => CalibrationArtifact::Gaussian { alpha: kv.parse_with("alpha", parse_alpha)?, bounds },
            "qr" => CalibrationArtifact::Qr { bounds },
            "cdp-acc" => CalibrationArtifact::CdpAcc(parse_acc(&kv, bounds)?),
            other => return Err(ArtifactError::UnknownMethod(other.into())),
        })
    }
}

fn parse_acc(kv: &Fields<'_>, bounds: Option<TargetBounds>) -> Result<AccCalibration, ArtifactError> {
    let alpha = kv.parse_with("alpha", parse_alpha)?;
    let bins: usize = kv.parse_with("bins", |v| v.parse().ok())?;
    let (lower, upper) = kv.parse_with("range", parse_pair)?;
    let partition = BinPartition::new(lower, upper, bins)
        .map_err(|_| ArtifactError::InvalidValue { key: "range".into(), value: format!("{lower},{upper}") })?;
    let rng = kv.get("tie_noise_rng")?;
    if rng != TIE_NOISE_RNG {
        return Err(ArtifactError::InvalidValue { key: "tie_noise_rng".into(), value: rng.into() });
    }
    let per_bin = (0..bins).map(|m| kv.parse_with(&format!("bin.{m}"), parse_bin)).collect::<Result<Vec<_>, _>>()?;
    Ok(AccCalibration {
        partition,
        bins: per_bin,
        fallback: CdpCalibration {
            s_hat: kv.parse_with("fallback.s_hat", parse_f64)?,
            n_cal: kv.parse_with("fallback.n_cal", |v| v.parse().ok())?,
            alpha,
            bounds,
        },
        alpha,
        hist_bins: kv.parse_with("hist_bins", |v| v.parse().ok())?,
        n_min: kv.parse_with("n_min", |v| v.parse().ok())?,
        seed: kv.parse_with("seed", |v| v.parse().ok())?,
        tie_noise: kv.parse_with("tie_noise", parse_f64)?,
        rule: kv.parse_with("rule", ScoreRule::parse)?,
        bounds,
    })
}

struct Fields<'a>(BTreeMap<&'a str, &'a str>);

impl<'a> Fields<'a> {
    fn parse(text: &'a str) -> Result<Self, ArtifactError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ArtifactError::BadLine(i + 1))?;
            map.insert(k.trim(), v.trim());
        }
        Ok(Self(map))
    }

    fn get(&self, key: &str) -> Result<&'a str, ArtifactError> {
        self.0.get(key).copied().ok_or_else(|| ArtifactError::MissingKey(key.into()))
    }

    fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<T, ArtifactError> {
        let v = self.get(key)?;
        f(v).ok_or_else(|| ArtifactError::InvalidValue { key: key.into(), value: v.into() })
    }
}

fn bounds_text(bounds: Option<TargetBounds>) -> String {
    bounds.map_or_else(|| "none".into(), |b| format!("{},{}", b.min(), b.max()))
}

fn parse_f64(v: &str) -> Option<f64> {
    v.parse::<f64>().ok().filter(|x| !x.is_nan())
}

fn parse_alpha(v: &str) -> Option<Alpha> {
    Alpha::new(parse_f64(v)?).ok()
}

fn parse_pair(v: &str) -> Option<(f64, f64)> {
    let (a, b) = v.split_once(',')?;
    Some((parse_f64(a.trim())?, parse_f64(b.trim())?))
}

fn parse_bounds(v: &str) -> Option<Option<TargetBounds>> {
    if v == "none" {
        return Some(None);
    }
    let (a, b) = parse_pair(v)?;
    TargetBounds::new(a, b).ok().map(Some)
}

fn parse_bin(v: &str) -> Option<BinCalibration> {
    let mut n = None;
    let mut s_hat = None;
    let mut interval = None;
    for part in v.split_whitespace() {
        let (k, val) = part.split_once('=')?;
        match k {
            "n" => n = Some(val.parse().ok()?),
            "s_hat" => s_hat = Some(if val == "none" { None } else { Some(parse_f64(val)?) }),
            "interval" => {
                interval = Some(if val == "fallback" {
                    None
                } else {
                    let (lo, hi) = parse_pair(val)?;
                    Some(Interval::new(lo, hi).ok()?)
                })
            }
            _ => return None,
        }
    }
    Some(BinCalibration { n: n?, s_hat: s_hat?, interval: interval? })
}
