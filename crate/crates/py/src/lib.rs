//! Python bindings: calibrators for CDP, CDP-ACC and CQR, Gaussian
//! intervals, metrics and the synthetic scenarios.

use cdp_core::acc::{calibrate_cdp_acc, AccCalibration, AccConfig, ScoreRule};
use cdp_core::artifact::CalibrationArtifact;
use cdp_core::baselines::{calibrate_cqr, gaussian_interval as core_gaussian_interval, CqrCalibration};
use cdp_core::cdp::{calibrate_cdp, CdpCalibration};
use cdp_core::metrics::{self, GroupScheme};
use cdp_core::synth::{generate_scenario as core_generate, ScenarioSpec};
use cdp_core::{Alpha, GaussianPredictionRecord, Interval, PredictionRecord, QuantilePredictionRecord, TargetBounds};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type Pair = (f64, f64);

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn alpha(a: f64) -> PyResult<Alpha> {
    Alpha::new(a).map_err(value_error)
}

fn bounds(b: Option<Pair>) -> PyResult<Option<TargetBounds>> {
    b.map(|(lo, hi)| TargetBounds::new(lo, hi).map_err(value_error)).transpose()
}

fn point_records(y_true: &[f64], y_pred: &[f64]) -> PyResult<Vec<PredictionRecord>> {
    if y_true.len() != y_pred.len() {
        return Err(value_error(format!("length mismatch: {} vs {}", y_true.len(), y_pred.len())));
    }
    y_true.iter().zip(y_pred).map(|(&y, &p)| PredictionRecord::new(y, p).map_err(value_error)).collect()
}

fn intervals(lo: &[f64], hi: &[f64]) -> PyResult<Vec<Interval>> {
    if lo.len() != hi.len() {
        return Err(value_error(format!("length mismatch: {} vs {}", lo.len(), hi.len())));
    }
    lo.iter().zip(hi).map(|(&a, &b)| Interval::new(a, b).map_err(value_error)).collect()
}

fn pair(iv: Interval) -> Pair {
    (iv.lo(), iv.hi())
}

fn from_text(text: &str) -> PyResult<CalibrationArtifact> {
    CalibrationArtifact::from_text(text).map_err(value_error)
}

/// Split conformal calibration on absolute residuals.
#[pyclass(name = "CDP", frozen)]
struct PyCdp(CdpCalibration);

#[pymethods]
impl PyCdp {
    #[staticmethod]
    #[pyo3(signature = (y_true, y_pred, alpha=0.1, bounds=None))]
    fn calibrate(y_true: Vec<f64>, y_pred: Vec<f64>, alpha: f64, bounds: Option<Pair>) -> PyResult<Self> {
        let recs = point_records(&y_true, &y_pred)?;
        calibrate_cdp(&recs, self::alpha(alpha)?, self::bounds(bounds)?).map(Self).map_err(value_error)
    }

    #[getter]
    fn s_hat(&self) -> f64 {
        self.0.s_hat
    }

    #[getter]
    fn n_cal(&self) -> usize {
        self.0.n_cal
    }

    fn predict(&self, y_pred: Vec<f64>) -> PyResult<Vec<Pair>> {
        y_pred.iter().map(|&p| self.0.predict(p).map(pair).map_err(value_error)).collect()
    }

    fn to_text(&self) -> String {
        CalibrationArtifact::Cdp(self.0.clone()).to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        match self::from_text(text)? {
            CalibrationArtifact::Cdp(c) => Ok(Self(c)),
            other => Err(value_error(format!("artifact holds a {} calibration", other.method()))),
        }
    }

    fn __repr__(&self) -> String {
        format!("CDP(s_hat={}, n_cal={}, alpha={})", self.0.s_hat, self.0.n_cal, self.0.alpha)
    }
}

/// Adaptive per-prediction-bin calibration.
#[pyclass(name = "CdpAcc", frozen)]
struct PyCdpAcc(AccCalibration);

#[pymethods]
impl PyCdpAcc {
    #[staticmethod]
    #[pyo3(signature = (
        y_true, y_pred, alpha=0.1, bins=14, hist_bins=63, range=None, n_min=10, seed=0,
        tie_noise=1e-6, rule="shortest", bounds=None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn calibrate(
        y_true: Vec<f64>,
        y_pred: Vec<f64>,
        alpha: f64,
        bins: usize,
        hist_bins: usize,
        range: Option<Pair>,
        n_min: usize,
        seed: u64,
        tie_noise: f64,
        rule: &str,
        bounds: Option<Pair>,
    ) -> PyResult<Self> {
        let recs = point_records(&y_true, &y_pred)?;
        let rule = ScoreRule::parse(rule).ok_or_else(|| value_error(format!("unknown rule {rule:?}")))?;
        let config = AccConfig { bins, hist_bins, range, n_min, seed, tie_noise, rule };
        calibrate_cdp_acc(&recs, self::alpha(alpha)?, &config, self::bounds(bounds)?).map(Self).map_err(value_error)
    }

    #[getter]
    fn bins(&self) -> usize {
        self.0.partition.bins()
    }

    /// Per-bin `(n, s_hat, interval)`; `s_hat` and `interval` are `None` for
    /// bins that fall back to CDP.
    fn bin_summary(&self) -> Vec<(usize, Option<f64>, Option<Pair>)> {
        self.0.bins.iter().map(|b| (b.n, b.s_hat, b.interval.map(pair))).collect()
    }

    fn predict(&self, y_pred: Vec<f64>) -> PyResult<Vec<Pair>> {
        y_pred.iter().map(|&p| self.0.predict(p).map(pair).map_err(value_error)).collect()
    }

    fn to_text(&self) -> String {
        CalibrationArtifact::CdpAcc(self.0.clone()).to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        match self::from_text(text)? {
            CalibrationArtifact::CdpAcc(c) => Ok(Self(c)),
            other => Err(value_error(format!("artifact holds a {} calibration", other.method()))),
        }
    }

    fn __repr__(&self) -> String {
        format!("CdpAcc(bins={}, hist_bins={}, alpha={})", self.0.partition.bins(), self.0.hist_bins, self.0.alpha)
    }
}

/// Conformalized quantile regression.
#[pyclass(name = "CQR", frozen)]
struct PyCqr(CqrCalibration);

#[pymethods]
impl PyCqr {
    #[staticmethod]
    #[pyo3(signature = (y_true, q_lo, q_hi, alpha=0.1, bounds=None))]
    fn calibrate(y_true: Vec<f64>, q_lo: Vec<f64>, q_hi: Vec<f64>, alpha: f64, bounds: Option<Pair>) -> PyResult<Self> {
        if y_true.len() != q_lo.len() || q_lo.len() != q_hi.len() {
            return Err(value_error("y_true, q_lo and q_hi must have equal lengths"));
        }
        let recs = (0..y_true.len())
            .map(|i| QuantilePredictionRecord::new(y_true[i], q_lo[i], q_hi[i]).map_err(value_error))
            .collect::<PyResult<Vec<_>>>()?;
        calibrate_cqr(&recs, self::alpha(alpha)?, self::bounds(bounds)?).map(Self).map_err(value_error)
    }

    #[getter]
    fn s_hat(&self) -> f64 {
        self.0.s_hat
    }

    fn predict(&self, q_lo: Vec<f64>, q_hi: Vec<f64>) -> PyResult<Vec<Pair>> {
        if q_lo.len() != q_hi.len() {
            return Err(value_error("q_lo and q_hi must have equal lengths"));
        }
        q_lo.iter().zip(&q_hi).map(|(&a, &b)| self.0.predict(a, b).map(pair).map_err(value_error)).collect()
    }

    fn to_text(&self) -> String {
        CalibrationArtifact::Cqr(self.0.clone()).to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        match self::from_text(text)? {
            CalibrationArtifact::Cqr(c) => Ok(Self(c)),
            other => Err(value_error(format!("artifact holds a {} calibration", other.method()))),
        }
    }

    fn __repr__(&self) -> String {
        format!("CQR(s_hat={}, n_cal={}, alpha={})", self.0.s_hat, self.0.n_cal, self.0.alpha)
    }
}

#[pyfunction]
#[pyo3(signature = (scores, alpha=0.1))]
fn conformal_quantile(scores: Vec<f64>, alpha: f64) -> PyResult<f64> {
    cdp_core::conformal_quantile(&scores, self::alpha(alpha)?).map_err(value_error)
}

#[pyfunction]
fn erf(x: f64) -> f64 {
    cdp_core::erf(x)
}

#[pyfunction]
fn inverse_erf(x: f64) -> PyResult<f64> {
    cdp_core::inverse_erf(x).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (mu, sigma, alpha=0.1, bounds=None))]
fn gaussian_interval(mu: f64, sigma: f64, alpha: f64, bounds: Option<Pair>) -> PyResult<Pair> {
    let rec = GaussianPredictionRecord::new(0.0, mu, sigma).map_err(value_error)?;
    Ok(pair(core_gaussian_interval(&rec, self::alpha(alpha)?, self::bounds(bounds)?)))
}

#[pyfunction]
fn picp(lo: Vec<f64>, hi: Vec<f64>, y_true: Vec<f64>) -> PyResult<f64> {
    metrics::picp(&intervals(&lo, &hi)?, &y_true).map_err(value_error)
}

#[pyfunction]
fn mpiw(lo: Vec<f64>, hi: Vec<f64>) -> PyResult<f64> {
    metrics::mpiw(&intervals(&lo, &hi)?).map_err(value_error)
}

/// Minimum per-group coverage over BDI-II severity strata.
#[pyfunction]
fn ssc_bdi(lo: Vec<f64>, hi: Vec<f64>, y_true: Vec<f64>) -> PyResult<f64> {
    metrics::ssc(&intervals(&lo, &hi)?, &y_true, &GroupScheme::bdi()).map_err(value_error)
}

/// `(mae, rmse)`.
#[pyfunction]
fn point_errors(y_pred: Vec<f64>, y_true: Vec<f64>) -> PyResult<Pair> {
    metrics::point_errors(&y_pred, &y_true).map_err(value_error)
}

/// `(y_true, y_pred)` lists for a named preset.
#[pyfunction]
#[pyo3(signature = (name, n, seed=0))]
fn generate_scenario(name: &str, n: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let spec = ScenarioSpec::named(name, n, seed).map_err(value_error)?;
    let recs = core_generate(&spec).map_err(value_error)?;
    Ok(recs.iter().map(|r| (r.y_true, r.y_pred)).unzip())
}

#[pymodule]
fn cdp_conformal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCdp>()?;
    m.add_class::<PyCdpAcc>()?;
    m.add_class::<PyCqr>()?;
    m.add_function(wrap_pyfunction!(conformal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(erf, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_erf, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_interval, m)?)?;
    m.add_function(wrap_pyfunction!(picp, m)?)?;
    m.add_function(wrap_pyfunction!(mpiw, m)?)?;
    m.add_function(wrap_pyfunction!(ssc_bdi, m)?)?;
    m.add_function(wrap_pyfunction!(point_errors, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scenario, m)?)?;
    Ok(())
}
