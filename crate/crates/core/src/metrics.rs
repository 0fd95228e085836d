//! Interval quality metrics and evaluation reports.

use crate::error::{Error, Result};
use crate::types::Interval;

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Prediction interval coverage probability: fraction of labels inside
/// their (closed) interval.
pub fn picp(intervals: &[Interval], y: &[f64]) -> Result<f64> {
    check_lengths(intervals.len(), y.len())?;
    let hits = intervals.iter().zip(y).filter(|(iv, &y)| iv.contains(y)).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Mean prediction interval width.
pub fn mpiw(intervals: &[Interval]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(intervals.iter().map(Interval::width).sum::<f64>() / intervals.len() as f64)
}

/// Mean absolute and root-mean-square error.
pub fn point_errors(y_pred: &[f64], y_true: &[f64]) -> Result<(f64, f64)> {
    check_lengths(y_pred.len(), y_true.len())?;
    let n = y_pred.len() as f64;
    let (abs, sq) = y_pred.iter().zip(y_true).fold((0.0, 0.0), |(abs, sq), (p, t)| {
        let e = p - t;
        (abs + e.abs(), sq + e * e)
    });
    Ok((abs / n, (sq / n).sqrt()))
}

/// Label strata for size-stratified coverage.
///
/// `edges` has `G + 1` entries; group `g` holds labels in
/// `[edges[g], edges[g + 1])`, the last group is closed, and labels outside
/// the outer edges join the nearest end group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScheme {
    edges: Vec<f64>,
    names: Vec<String>,
}

impl GroupScheme {
    pub fn new(edges: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidGroupScheme("need at least two edges".into()));
        }
        if names.len() != edges.len() - 1 {
            return Err(Error::InvalidGroupScheme(format!(
                "{} edges define {} groups but {} names were given",
                edges.len(),
                edges.len() - 1,
                names.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGroupScheme("edges must be finite and strictly increasing".into()));
        }
        Ok(Self { edges, names })
    }

    /// BDI-II severity strata: 0-13 minimal, 14-19 mild, 20-28 moderate,
    /// 29-63 severe.
    pub fn bdi() -> Self {
        Self {
            edges: vec![0.0, 14.0, 20.0, 29.0, 63.0],
            names: ["minimal", "mild", "moderate", "severe"].map(String::from).to_vec(),
        }
    }

    /// `groups` equal-count strata cut at empirical quantiles of `y`.
    /// Duplicate cut points are merged, so fewer groups may result.
    pub fn quantiles(y: &[f64], groups: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyInput);
        }
        if groups < 1 {
            return Err(Error::InvalidGroupScheme("need at least one group".into()));
        }
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut edges = vec![sorted[0]];
        for g in 1..groups {
            let cut = sorted[(g * n / groups).min(n - 1)];
            if cut > *edges.last().expect("non-empty") {
                edges.push(cut);
            }
        }
        let top = sorted[n - 1];
        if top > *edges.last().expect("non-empty") {
            edges.push(top);
        } else {
            // every label identical
            edges.push(top + 1.0);
        }
        let names = (1..edges.len()).map(|g| format!("q{g}")).collect();
        Self::new(edges, names)
    }

    pub fn groups(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn group_of(&self, y: f64) -> usize {
        let interior = &self.edges[1..self.edges.len() - 1];
        interior.partition_point(|&e| e <= y)
    }
}

/// One row of the per-group breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub name: String,
    pub count: usize,
    /// `None` for empty groups.
    pub coverage: Option<f64>,
    pub mean_width: Option<f64>,
}

/// Per-group coverage and width.
pub fn group_breakdown(intervals: &[Interval], y: &[f64], scheme: &GroupScheme) -> Result<Vec<GroupStats>> {
    check_lengths(intervals.len(), y.len())?;
    let g = scheme.groups();
    let mut count = vec![0usize; g];
    let mut hits = vec![0usize; g];
    let mut width = vec![0.0; g];
    for (iv, &yi) in intervals.iter().zip(y) {
        let k = scheme.group_of(yi);
        count[k] += 1;
        hits[k] += usize::from(iv.contains(yi));
        width[k] += iv.width();
    }
    Ok((0..g)
        .map(|k| GroupStats {
            name: scheme.names[k].clone(),
            count: count[k],
            coverage: (count[k] > 0).then(|| hits[k] as f64 / count[k] as f64),
            mean_width: (count[k] > 0).then(|| width[k] / count[k] as f64),
        })
        .collect())
}

/// Size-stratified coverage: the minimum coverage over non-empty groups.
pub fn ssc(intervals: &[Interval], y: &[f64], scheme: &GroupScheme) -> Result<f64> {
    let rows = group_breakdown(intervals, y, scheme)?;
    Ok(min_coverage(&rows))
}

fn min_coverage(rows: &[GroupStats]) -> f64 {
    rows.iter().filter_map(|r| r.coverage).fold(f64::INFINITY, f64::min)
}

/// Metrics for one method on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method: String,
    pub n_test: usize,
    pub picp: f64,
    pub mpiw: f64,
    pub ssc: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Fraction of test records whose raw quantiles crossed.
    pub crossing_rate: f64,
    /// Mean width before truncation, when the method truncates.
    pub mpiw_unclipped: Option<f64>,
    pub per_group: Vec<GroupStats>,
}

impl EvaluationReport {
    /// Names of groups with no test labels; these are excluded from SSC.
    pub fn empty_groups(&self) -> Vec<&str> {
        self.per_group.iter().filter(|g| g.count == 0).map(|g| g.name.as_str()).collect()
    }
}

/// Inputs to [`evaluate`] beyond the intervals themselves.
#[derive(Debug, Clone, Copy)]
pub struct EvaluationInputs<'a> {
    pub y_true: &'a [f64],
    /// Point predictions used for MAE/RMSE.
    pub y_point: &'a [f64],
    pub crossings: usize,
    pub unclipped: Option<&'a [Interval]>,
}

pub fn evaluate(
    method: &str,
    intervals: &[Interval],
    inputs: EvaluationInputs<'_>,
    scheme: &GroupScheme,
) -> Result<EvaluationReport> {
    check_lengths(intervals.len(), inputs.y_true.len())?;
    let (mae, rmse) = point_errors(inputs.y_point, inputs.y_true)?;
    let per_group = group_breakdown(intervals, inputs.y_true, scheme)?;
    Ok(EvaluationReport {
        method: method.to_string(),
        n_test: intervals.len(),
        picp: picp(intervals, inputs.y_true)?,
        mpiw: mpiw(intervals)?,
        ssc: min_coverage(&per_group),
        mae,
        rmse,
        crossing_rate: inputs.crossings as f64 / intervals.len() as f64,
        mpiw_unclipped: inputs.unclipped.map(mpiw).transpose()?,
        per_group,
    })
}
