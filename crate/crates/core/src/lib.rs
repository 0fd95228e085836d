//! Post-hoc calibration of regression outputs into prediction intervals.
//!
//! - [`cdp`]: split conformal intervals around point predictions.
//! - [`acc`]: adaptive intervals with approximate conditional coverage, built
//!   from per-prediction-bin label histograms.
//! - [`baselines`]: conformalized quantile regression, raw quantile bands and
//!   Gaussian intervals.
//! - [`metrics`]: PICP, MPIW, size-stratified coverage, MAE/RMSE.
//! - [`synth`]: seeded synthetic `(y_hat, y)` scenarios.
//! - [`io`] and [`artifact`]: prediction files, reports and frozen
//!   calibrations.

pub mod acc;
pub mod artifact;
pub mod baselines;
pub mod cdp;
pub mod conformal;
pub mod error;
pub mod io;
pub mod metrics;
pub mod special;
pub mod synth;
pub mod types;

pub use acc::{calibrate_cdp_acc, predict_cdp_acc, AccCalibration, AccConfig, ScoreRule};
pub use baselines::{calibrate_cqr, gaussian_interval, predict_cqr, predict_qr_raw, CqrCalibration};
pub use cdp::{calibrate_cdp, predict_cdp, CdpCalibration};
pub use conformal::{clip_interval, conformal_quantile};
pub use error::{Error, Result};
pub use special::{erf, inverse_erf};
pub use types::{Alpha, GaussianPredictionRecord, Interval, PredictionRecord, QuantilePredictionRecord, TargetBounds};
