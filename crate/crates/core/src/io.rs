//! Prediction-file ingestion and report rendering.
//!
//! Prediction files are comma-separated with a mandatory header row; column
//! order is free and extra columns are ignored. Reports render reals with
//! four decimals in a fixed column order and end with a newline, so
//! identical reports produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::artifact::{ArtifactError, CalibrationArtifact};
use crate::metrics::{EvaluationReport, GroupStats};
use crate::types::{GaussianPredictionRecord, Interval, PredictionRecord, QuantilePredictionRecord};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: file not found")]
    FileNotFound { path: PathBuf },
    #[error("{path}: missing column {name:?}")]
    MissingColumn { path: PathBuf, name: String },
    #[error("{path}:{line}: malformed row ({reason})")]
    MalformedRow { path: PathBuf, line: u64, reason: String },
    #[error("{path}:{line}: non-finite value")]
    NonFiniteValue { path: PathBuf, line: u64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Artifact {
        path: PathBuf,
        #[source]
        source: ArtifactError,
    },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            IoError::FileNotFound { path: path.into() }
        } else {
            IoError::Io { path: path.into(), source }
        }
    }
}

pub type IoResult<T> = std::result::Result<T, IoError>;

/// Which model-output columns a file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    Point,
    Quantile,
    Gaussian,
}

impl SchemaKind {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            SchemaKind::Point => &["y_true", "y_pred"],
            SchemaKind::Quantile => &["y_true", "q_lo", "q_hi"],
            SchemaKind::Gaussian => &["y_true", "mu", "sigma"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaKind::Point => "point",
            SchemaKind::Quantile => "quantile",
            SchemaKind::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "point" => Some(SchemaKind::Point),
            "quantile" => Some(SchemaKind::Quantile),
            "gaussian" => Some(SchemaKind::Gaussian),
            _ => None,
        }
    }
}

/// Typed records from one prediction file, in file order.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Point(Vec<PredictionRecord>),
    Quantile(Vec<QuantilePredictionRecord>),
    Gaussian(Vec<GaussianPredictionRecord>),
}

impl Predictions {
    pub fn kind(&self) -> SchemaKind {
        match self {
            Predictions::Point(_) => SchemaKind::Point,
            Predictions::Quantile(_) => SchemaKind::Quantile,
            Predictions::Gaussian(_) => SchemaKind::Gaussian,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Predictions::Point(v) => v.len(),
            Predictions::Quantile(v) => v.len(),
            Predictions::Gaussian(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn y_true(&self) -> Vec<f64> {
        match self {
            Predictions::Point(v) => v.iter().map(|r| r.y_true).collect(),
            Predictions::Quantile(v) => v.iter().map(|r| r.y_true).collect(),
            Predictions::Gaussian(v) => v.iter().map(|r| r.y_true).collect(),
        }
    }

    /// Point estimate per record: `y_pred`, the quantile midpoint, or `mu`.
    pub fn y_point(&self) -> Vec<f64> {
        match self {
            Predictions::Point(v) => v.iter().map(|r| r.y_pred).collect(),
            Predictions::Quantile(v) => v.iter().map(QuantilePredictionRecord::midpoint).collect(),
            Predictions::Gaussian(v) => v.iter().map(|r| r.mu).collect(),
        }
    }
}

pub fn read_predictions(path: impl AsRef<Path>, schema: SchemaKind) -> IoResult<Predictions> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_predictions(&text, path, schema)
}

/// Parses prediction CSV text; `path` only labels errors.
pub fn parse_predictions(text: &str, path: &Path, schema: SchemaKind) -> IoResult<Predictions> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IoError::MalformedRow { path: path.into(), line: 1, reason: e.to_string() })?
        .clone();
    let columns = schema
        .columns()
        .iter()
        .map(|&name| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| IoError::MissingColumn { path: path.into(), name: name.into() })
        })
        .collect::<IoResult<Vec<_>>>()?;

    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| IoError::MalformedRow {
            path: path.into(),
            line: e.position().map_or(0, csv::Position::line),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        let values = columns
            .iter()
            .zip(schema.columns())
            .map(|(&idx, name)| {
                let raw = record.get(idx).ok_or_else(|| IoError::MalformedRow {
                    path: path.into(),
                    line,
                    reason: format!("missing field {name}"),
                })?;
                let v: f64 = raw.parse().map_err(|_| IoError::MalformedRow {
                    path: path.into(),
                    line,
                    reason: format!("{name} = {raw:?} is not a number"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(IoError::NonFiniteValue { path: path.into(), line })
                }
            })
            .collect::<IoResult<Vec<_>>>()?;
        rows.push((line, values));
    }

    let invalid = |line: u64, e: crate::Error| IoError::MalformedRow { path: path.into(), line, reason: e.to_string() };
    Ok(match schema {
        SchemaKind::Point => Predictions::Point(
            rows.iter()
                .map(|(l, v)| PredictionRecord::new(v[0], v[1]).map_err(|e| invalid(*l, e)))
                .collect::<IoResult<_>>()?,
        ),
        SchemaKind::Quantile => Predictions::Quantile(
            rows.iter()
                .map(|(l, v)| QuantilePredictionRecord::new(v[0], v[1], v[2]).map_err(|e| invalid(*l, e)))
                .collect::<IoResult<_>>()?,
        ),
        SchemaKind::Gaussian => Predictions::Gaussian(
            rows.iter()
                .map(|(l, v)| GaussianPredictionRecord::new(v[0], v[1], v[2]).map_err(|e| invalid(*l, e)))
                .collect::<IoResult<_>>()?,
        ),
    })
}

/// Renders predictions in the same layout [`read_predictions`] accepts.
pub fn predictions_to_csv(preds: &Predictions) -> String {
    let mut out = preds.kind().columns().join(",");
    out.push('\n');
    let mut line = |vals: &[f64]| {
        let cells: Vec<String> = vals.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    };
    match preds {
        Predictions::Point(v) => v.iter().for_each(|r| line(&[r.y_true, r.y_pred])),
        Predictions::Quantile(v) => v.iter().for_each(|r| line(&[r.y_true, r.q_lo, r.q_hi])),
        Predictions::Gaussian(v) => v.iter().for_each(|r| line(&[r.y_true, r.mu, r.sigma])),
    }
    out
}

pub fn write_predictions(preds: &Predictions, path: impl AsRef<Path>) -> IoResult<()> {
    write_text(path.as_ref(), &predictions_to_csv(preds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(ReportFormat::Csv),
            "markdown" | "md" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

/// Provenance lines rendered above the table (`# key: value` in CSV,
/// HTML comments in markdown).
pub type ReportHeader = Vec<(String, String)>;

fn fixed(v: f64) -> String {
    format!("{v:.4}")
}

fn fixed_opt(v: Option<f64>) -> String {
    v.map(fixed).unwrap_or_default()
}

const CSV_COLUMNS: &str = "method,n_test,mae,rmse,picp,mpiw,ssc,crossing_rate,mpiw_unclipped";

/// Renders a method table, one row per report in the given order.
pub fn render_reports(reports: &[EvaluationReport], header: &ReportHeader, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            for (k, v) in header {
                writeln!(out, "# {k}: {v}").expect("String write");
            }
            writeln!(out, "{CSV_COLUMNS}").expect("String write");
            for r in reports {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.method,
                    r.n_test,
                    fixed(r.mae),
                    fixed(r.rmse),
                    fixed(r.picp),
                    fixed(r.mpiw),
                    fixed(r.ssc),
                    fixed(r.crossing_rate),
                    fixed_opt(r.mpiw_unclipped)
                )
                .expect("String write");
            }
        }
        ReportFormat::Markdown => {
            for (k, v) in header {
                writeln!(out, "<!-- {k}: {v} -->").expect("String write");
            }
            out.push_str("| Method | N | MAE | RMSE | PICP | MPIW | SSC |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
            for r in reports {
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    r.method,
                    r.n_test,
                    fixed(r.mae),
                    fixed(r.rmse),
                    fixed(r.picp),
                    fixed(r.mpiw),
                    fixed(r.ssc)
                )
                .expect("String write");
            }
        }
    }
    out
}

pub fn write_report(
    report: &EvaluationReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
    header: &ReportHeader,
) -> IoResult<()> {
    write_text(path.as_ref(), &render_reports(std::slice::from_ref(report), header, format))
}

pub fn write_reports(
    reports: &[EvaluationReport],
    path: impl AsRef<Path>,
    format: ReportFormat,
    header: &ReportHeader,
) -> IoResult<()> {
    write_text(path.as_ref(), &render_reports(reports, header, format))
}

/// Reads a CSV report back. Per-group rows are not part of this file and
/// come back empty.
pub fn read_report_csv(path: impl AsRef<Path>) -> IoResult<Vec<EvaluationReport>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(false).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(|e| IoError::MalformedRow {
            path: path.into(),
            line: e.position().map_or(0, csv::Position::line),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, csv::Position::line);
        let bad = |reason: &str| IoError::MalformedRow { path: path.into(), line, reason: reason.into() };
        let num = |i: usize| -> IoResult<f64> { rec[i].parse().map_err(|_| bad(&format!("column {i}"))) };
        out.push(EvaluationReport {
            method: rec[0].to_string(),
            n_test: rec[1].parse().map_err(|_| bad("n_test"))?,
            mae: num(2)?,
            rmse: num(3)?,
            picp: num(4)?,
            mpiw: num(5)?,
            ssc: num(6)?,
            crossing_rate: num(7)?,
            mpiw_unclipped: if rec[8].is_empty() { None } else { Some(num(8)?) },
            per_group: Vec::new(),
        });
    }
    Ok(out)
}

/// Per-group breakdown for a set of reports.
pub fn render_groups(reports: &[EvaluationReport]) -> String {
    let mut out = String::from("method,group,count,coverage,mean_width\n");
    for r in reports {
        for GroupStats { name, count, coverage, mean_width } in &r.per_group {
            writeln!(out, "{},{},{},{},{}", r.method, name, count, fixed_opt(*coverage), fixed_opt(*mean_width))
                .expect("String write");
        }
    }
    out
}

/// Per-sample intervals with full-precision endpoints.
pub fn render_intervals(intervals: &[Interval], y_true: &[f64], y_point: &[f64]) -> String {
    let mut out = String::from("index,y_true,y_point,lo,hi,covered\n");
    for (i, ((iv, y), p)) in intervals.iter().zip(y_true).zip(y_point).enumerate() {
        writeln!(out, "{i},{y},{p},{},{},{}", iv.lo(), iv.hi(), u8::from(iv.contains(*y))).expect("String write");
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> IoResult<()> {
    fs::write(path, text).map_err(|e| IoError::io(path, e))
}

pub fn write_artifact(artifact: &CalibrationArtifact, path: impl AsRef<Path>) -> IoResult<()> {
    write_text(path.as_ref(), &artifact.to_text())
}

pub fn read_artifact(path: impl AsRef<Path>) -> IoResult<CalibrationArtifact> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    CalibrationArtifact::from_text(&text).map_err(|source| IoError::Artifact { path: path.into(), source })
}
