//! Calibrate/evaluate runs, method comparison and the bin-count sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cdp_core::acc::{calibrate_cdp_acc, AccConfig};
use cdp_core::artifact::CalibrationArtifact;
use cdp_core::baselines::{calibrate_cqr, gaussian_interval, gaussian_interval_raw, predict_qr_raw};
use cdp_core::cdp::calibrate_cdp;
use cdp_core::io::{
    read_predictions, render_groups, render_intervals, render_reports, write_artifact, write_text, IoError,
    Predictions, ReportFormat, ReportHeader, SchemaKind,
};
use cdp_core::metrics::{evaluate, EvaluationInputs, EvaluationReport, GroupScheme};
use cdp_core::synth::{exchangeable_split, gaussian_records, generate_scenario, quantile_records, RNG_ALGORITHM};
use cdp_core::{Alpha, Interval};

use crate::config::{DataSource, Method, RunConfig};
use crate::error::{CliError, CliResult};

/// Offset applied to the scenario seed for the calibration/test shuffle, so
/// the split does not replay the generator's stream.
const SPLIT_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;
/// Offset for the validation split inside the calibration set.
const SWEEP_SEED_OFFSET: u64 = 0x5851_f42d_4c95_7f2d;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub cal: Predictions,
    pub test: Predictions,
}

/// Reads or synthesises the calibration and test records for `config`.
pub fn load_data(config: &RunConfig) -> CliResult<Dataset> {
    match &config.data {
        DataSource::Files { cal, test } => {
            Ok(Dataset { cal: read_predictions(cal, config.schema)?, test: read_predictions(test, config.schema)? })
        }
        DataSource::Scenario { spec, n_cal, n_test, width_scale } => {
            let records = generate_scenario(spec)?;
            let frac = *n_cal as f64 / (n_cal + n_test) as f64;
            let (cal, test) = exchangeable_split(&records, frac, spec.seed.wrapping_add(SPLIT_SEED_OFFSET))?;
            let view = |recs: Vec<cdp_core::PredictionRecord>| -> CliResult<Predictions> {
                Ok(match config.schema {
                    SchemaKind::Point => Predictions::Point(recs),
                    SchemaKind::Quantile => {
                        Predictions::Quantile(quantile_records(spec, &recs, config.alpha, *width_scale)?)
                    }
                    SchemaKind::Gaussian => Predictions::Gaussian(gaussian_records(spec, &recs, *width_scale)?),
                })
            };
            Ok(Dataset { cal: view(cal)?, test: view(test)? })
        }
    }
}

fn acc_config(config: &RunConfig, bins: usize) -> AccConfig {
    AccConfig {
        bins,
        hist_bins: config.hist_bins,
        range: config.range,
        n_min: config.n_min,
        seed: config.seed,
        tie_noise: config.tie_noise,
        rule: config.rule,
    }
}

fn kind_mismatch(method: &str, got: SchemaKind) -> CliError {
    CliError::Validation(format!("method {method} cannot use {} records", got.as_str()))
}

/// Fits the method's calibration on `cal`.
pub fn calibrate(config: &RunConfig, cal: &Predictions) -> CliResult<CalibrationArtifact> {
    calibrate_with_bins(config, cal, config.bins)
}

fn calibrate_with_bins(config: &RunConfig, cal: &Predictions, bins: usize) -> CliResult<CalibrationArtifact> {
    let (alpha, bounds) = (config.alpha, config.bounds);
    Ok(match (config.method, cal) {
        (Method::Cdp, Predictions::Point(r)) => CalibrationArtifact::Cdp(calibrate_cdp(r, alpha, bounds)?),
        (Method::CdpAcc, Predictions::Point(r)) => {
            CalibrationArtifact::CdpAcc(calibrate_cdp_acc(r, alpha, &acc_config(config, bins), bounds)?)
        }
        (Method::Cqr, Predictions::Quantile(r)) => CalibrationArtifact::Cqr(calibrate_cqr(r, alpha, bounds)?),
        (Method::Qr, Predictions::Quantile(_)) => CalibrationArtifact::Qr { bounds },
        (Method::Gaussian, Predictions::Gaussian(_)) => CalibrationArtifact::Gaussian { alpha, bounds },
        (m, other) => return Err(kind_mismatch(m.as_str(), other.kind())),
    })
}

/// Intervals for every test record.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedIntervals {
    pub intervals: Vec<Interval>,
    pub crossings: usize,
    /// Before truncation; set for the Gaussian method when bounds apply.
    pub unclipped: Option<Vec<Interval>>,
}

pub fn predict(artifact: &CalibrationArtifact, test: &Predictions) -> CliResult<PredictedIntervals> {
    let plain = |intervals| PredictedIntervals { intervals, crossings: 0, unclipped: None };
    Ok(match (artifact, test) {
        (CalibrationArtifact::Cdp(c), Predictions::Point(r)) => {
            plain(r.iter().map(|x| c.predict(x.y_pred)).collect::<Result<_, _>>()?)
        }
        (CalibrationArtifact::CdpAcc(c), Predictions::Point(r)) => {
            plain(r.iter().map(|x| c.predict(x.y_pred)).collect::<Result<_, _>>()?)
        }
        (CalibrationArtifact::Cqr(c), Predictions::Quantile(r)) => PredictedIntervals {
            intervals: r.iter().map(|x| c.predict(x.q_lo, x.q_hi)).collect::<Result<_, _>>()?,
            crossings: r.iter().filter(|x| x.is_crossed()).count(),
            unclipped: None,
        },
        (CalibrationArtifact::Qr { bounds }, Predictions::Quantile(r)) => {
            let (intervals, flags): (Vec<_>, Vec<_>) = r.iter().map(|x| predict_qr_raw(x, *bounds)).unzip();
            PredictedIntervals { intervals, crossings: flags.iter().filter(|&&f| f).count(), unclipped: None }
        }
        (CalibrationArtifact::Gaussian { alpha, bounds }, Predictions::Gaussian(r)) => PredictedIntervals {
            intervals: r.iter().map(|x| gaussian_interval(x, *alpha, *bounds)).collect(),
            crossings: 0,
            unclipped: bounds.map(|_| r.iter().map(|x| gaussian_interval_raw(x, *alpha)).collect()),
        },
        (a, t) => return Err(kind_mismatch(a.method(), t.kind())),
    })
}

fn group_scheme(config: &RunConfig, y: &[f64]) -> CliResult<GroupScheme> {
    if config.bdi {
        Ok(GroupScheme::bdi())
    } else {
        Ok(GroupScheme::quantiles(y, 4)?)
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: EvaluationReport,
    pub artifact: CalibrationArtifact,
    pub predicted: PredictedIntervals,
    pub y_true: Vec<f64>,
    pub y_point: Vec<f64>,
}

/// Calibrates on `data.cal` and evaluates on `data.test`, without touching
/// the filesystem.
pub fn evaluate_on(config: &RunConfig, data: &Dataset) -> CliResult<RunOutput> {
    let artifact = calibrate(config, &data.cal)?;
    score(config, artifact, &data.test)
}

fn score(config: &RunConfig, artifact: CalibrationArtifact, test: &Predictions) -> CliResult<RunOutput> {
    let predicted = predict(&artifact, test)?;
    let y_true = test.y_true();
    let y_point = test.y_point();
    let scheme = group_scheme(config, &y_true)?;
    let report = evaluate(
        config.method.as_str(),
        &predicted.intervals,
        EvaluationInputs {
            y_true: &y_true,
            y_point: &y_point,
            crossings: predicted.crossings,
            unclipped: predicted.unclipped.as_deref(),
        },
        &scheme,
    )?;
    Ok(RunOutput { report, artifact, predicted, y_true, y_point })
}

pub fn run(config: &RunConfig) -> CliResult<RunOutput> {
    let data = load_data(config)?;
    evaluate_on(config, &data)
}

fn report_header(config: &RunConfig) -> ReportHeader {
    let mut h = vec![
        ("tool".to_string(), format!("cdp {}", env!("CARGO_PKG_VERSION"))),
        ("alpha".to_string(), config.alpha.to_string()),
        ("seed".to_string(), config.seed.to_string()),
        ("rng".to_string(), RNG_ALGORITHM.to_string()),
        ("data".to_string(), config.data.describe()),
        (
            "bounds".to_string(),
            config.bounds.map_or_else(|| "none".to_string(), |b| format!("{},{}", b.min(), b.max())),
        ),
    ];
    if config.method == Method::CdpAcc {
        h.push((
            "cdp-acc".to_string(),
            format!(
                "bins={} hist_bins={} n_min={} rule={}",
                config.bins,
                config.hist_bins,
                config.n_min,
                config.rule.as_str()
            ),
        ));
    }
    h
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.into(), source })?;
    Ok(())
}

fn report_path(dir: &Path, stem: &str, format: ReportFormat) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

/// Runs and writes `report.{csv,md}`, `groups.csv`, `intervals.csv` and
/// `calibration.txt` into `config.out`.
pub fn cmd_run(config: &RunConfig) -> CliResult<RunOutput> {
    let output = run(config)?;
    let dir = &config.out;
    prepare_out(dir)?;
    let header = report_header(config);
    write_text(
        &report_path(dir, "report", config.format),
        &render_reports(std::slice::from_ref(&output.report), &header, config.format),
    )?;
    write_text(&dir.join("groups.csv"), &render_groups(std::slice::from_ref(&output.report)))?;
    write_text(
        &dir.join("intervals.csv"),
        &render_intervals(&output.predicted.intervals, &output.y_true, &output.y_point),
    )?;
    write_artifact(&output.artifact, dir.join("calibration.txt"))?;
    Ok(output)
}

/// One report per config, ordered by method name. All configs must share
/// their data source and miscoverage rate.
pub fn compare(configs: &[RunConfig]) -> CliResult<Vec<EvaluationReport>> {
    let first = configs.first().ok_or_else(|| CliError::Validation("compare needs at least one method".into()))?;
    for c in &configs[1..] {
        if c.data != first.data {
            return Err(CliError::DataMismatch(format!("{} vs {}", first.data.describe(), c.data.describe())));
        }
        if c.alpha != first.alpha {
            return Err(CliError::DataMismatch(format!("alpha {} vs {}", first.alpha, c.alpha)));
        }
    }
    let mut sorted: Vec<&RunConfig> = configs.iter().collect();
    sorted.sort_by_key(|c| c.method.as_str());
    sorted.iter().map(|c| run(c).map(|o| o.report)).collect()
}

/// Writes `comparison.{csv,md}` and `groups.csv` into the first config's
/// output directory.
pub fn cmd_compare(configs: &[RunConfig]) -> CliResult<Vec<EvaluationReport>> {
    let reports = compare(configs)?;
    let first = &configs[0];
    prepare_out(&first.out)?;
    let mut header = report_header(first);
    header.retain(|(k, _)| k != "cdp-acc");
    write_text(&report_path(&first.out, "comparison", first.format), &render_reports(&reports, &header, first.format))?;
    write_text(&first.out.join("groups.csv"), &render_groups(&reports))?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub bins: usize,
    pub picp: f64,
    pub mpiw: f64,
    pub ssc: f64,
    /// Narrowest row among those reaching `1 - alpha` coverage.
    pub selected: bool,
}

/// Splits the calibration set in half, calibrates CDP-ACC on one half for
/// each bin count and evaluates on the other.
pub fn sweep_m(base: &RunConfig, m_values: &[usize]) -> CliResult<Vec<SweepRow>> {
    if base.method != Method::CdpAcc {
        return Err(CliError::Validation(format!("sweep-m requires --method cdp-acc, got {}", base.method.as_str())));
    }
    if m_values.is_empty() || m_values.contains(&0) {
        return Err(CliError::Validation("--m-values must be a non-empty list of positive integers".into()));
    }
    let data = load_data(base)?;
    let Predictions::Point(cal) = &data.cal else {
        return Err(kind_mismatch("cdp-acc", data.cal.kind()));
    };
    let (fit, validation) = exchangeable_split(cal, 0.5, base.seed.wrapping_add(SWEEP_SEED_OFFSET))?;
    let fit = Predictions::Point(fit);
    let validation = Predictions::Point(validation);
    let mut rows = m_values
        .iter()
        .map(|&m| {
            let artifact = calibrate_with_bins(base, &fit, m)?;
            let r = score(base, artifact, &validation)?.report;
            Ok(SweepRow { bins: m, picp: r.picp, mpiw: r.mpiw, ssc: r.ssc, selected: false })
        })
        .collect::<CliResult<Vec<_>>>()?;
    mark_selection(&mut rows, base.alpha);
    Ok(rows)
}

fn mark_selection(rows: &mut [SweepRow], alpha: Alpha) {
    let target = alpha.coverage();
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.picp >= target)
        .min_by(|(_, a), (_, b)| a.mpiw.total_cmp(&b.mpiw).then(a.bins.cmp(&b.bins)))
        .map(|(i, _)| i);
    if let Some(i) = best {
        rows[i].selected = true;
    }
}

pub fn render_sweep(rows: &[SweepRow], header: &ReportHeader, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            for (k, v) in header {
                writeln!(out, "# {k}: {v}").expect("String write");
            }
            out.push_str("bins,picp,mpiw,ssc,selected\n");
            for r in rows {
                writeln!(out, "{},{:.4},{:.4},{:.4},{}", r.bins, r.picp, r.mpiw, r.ssc, u8::from(r.selected))
                    .expect("String write");
            }
        }
        ReportFormat::Markdown => {
            for (k, v) in header {
                writeln!(out, "<!-- {k}: {v} -->").expect("String write");
            }
            out.push_str("| M | PICP | MPIW | SSC | Selected |\n|---:|---:|---:|---:|:---:|\n");
            for r in rows {
                let mark = if r.selected { "*" } else { "" };
                writeln!(out, "| {} | {:.4} | {:.4} | {:.4} | {mark} |", r.bins, r.picp, r.mpiw, r.ssc)
                    .expect("String write");
            }
        }
    }
    out
}

/// Writes `sweep.{csv,md}` into `base.out`.
pub fn cmd_sweep_m(base: &RunConfig, m_values: &[usize]) -> CliResult<Vec<SweepRow>> {
    let rows = sweep_m(base, m_values)?;
    prepare_out(&base.out)?;
    let mut header = report_header(base);
    header.retain(|(k, _)| k != "cdp-acc");
    header.push(("validation".into(), "half of the calibration set".into()));
    write_text(&report_path(&base.out, "sweep", base.format), &render_sweep(&rows, &header, base.format))?;
    Ok(rows)
}

/// Calibrates only, writing `calibration.txt` into `config.out`.
pub fn cmd_calibrate(config: &RunConfig) -> CliResult<CalibrationArtifact> {
    let cal = match &config.data {
        DataSource::Files { cal, .. } => read_predictions(cal, config.schema)?,
        DataSource::Scenario { .. } => load_data(config)?.cal,
    };
    let artifact = calibrate(config, &cal)?;
    prepare_out(&config.out)?;
    write_artifact(&artifact, config.out.join("calibration.txt"))?;
    Ok(artifact)
}

/// Applies a stored calibration to `test`, writing `intervals.csv`.
pub fn cmd_predict(artifact_path: &Path, test: &Path, out: &Path) -> CliResult<PredictedIntervals> {
    let artifact = cdp_core::io::read_artifact(artifact_path)?;
    let schema = match artifact {
        CalibrationArtifact::Cdp(_) | CalibrationArtifact::CdpAcc(_) => SchemaKind::Point,
        CalibrationArtifact::Cqr(_) | CalibrationArtifact::Qr { .. } => SchemaKind::Quantile,
        CalibrationArtifact::Gaussian { .. } => SchemaKind::Gaussian,
    };
    let records = read_predictions(test, schema)?;
    let predicted = predict(&artifact, &records)?;
    prepare_out(out)?;
    write_text(
        &out.join("intervals.csv"),
        &render_intervals(&predicted.intervals, &records.y_true(), &records.y_point()),
    )?;
    Ok(predicted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(bins: usize, picp: f64, mpiw: f64) -> SweepRow {
        SweepRow { bins, picp, mpiw, ssc: 0.0, selected: false }
    }

    #[test]
    fn selection_prefers_narrowest_valid_row() {
        let mut rows = vec![row(1, 0.95, 20.0), row(2, 0.91, 15.0), row(3, 0.85, 10.0), row(4, 0.90, 15.0)];
        mark_selection(&mut rows, Alpha::new(0.1).unwrap());
        let picked: Vec<usize> = rows.iter().filter(|r| r.selected).map(|r| r.bins).collect();
        assert_eq!(picked, vec![2]);
    }

    #[test]
    fn selection_can_be_empty() {
        let mut rows = vec![row(1, 0.5, 1.0)];
        mark_selection(&mut rows, Alpha::new(0.1).unwrap());
        assert!(!rows[0].selected);
    }
}
