use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RawConfig;

#[derive(Debug, Parser)]
#[command(name = "cdp", version, about = "Calibrate regression predictions into conformal prediction intervals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate on one set, evaluate on another, write report and intervals.
    Run(RunArgs),
    /// Evaluate several methods on the same data.
    Compare(CompareArgs),
    /// Sweep the number of prediction bins for cdp-acc.
    #[command(name = "sweep-m")]
    SweepM(SweepArgs),
    /// Calibrate and write the calibration artifact only.
    Calibrate(RunArgs),
    /// Apply a stored calibration to a test file.
    Predict(PredictArgs),
}

/// Settings shared by every calibrating command. Unset flags fall back to
/// the config file, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// cdp, cdp-acc, cqr, qr or gaussian.
    #[arg(long)]
    pub method: Option<String>,
    /// Target miscoverage rate in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub cal: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// point, quantile or gaussian.
    #[arg(long)]
    pub schema: Option<String>,
    /// Prediction bins M (cdp-acc).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Histogram cells K (cdp-acc).
    #[arg(long)]
    pub hist_bins: Option<usize>,
    /// Target clip bounds LO,HI.
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Prediction range L,U for cdp-acc binning.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// BDI-II setup: bounds and range [0, 63] plus severity strata.
    #[arg(long)]
    pub bdi: bool,
    /// Minimum bin size before falling back to global CDP.
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tie-breaking noise, as a fraction of the label support width.
    #[arg(long)]
    pub tie_noise: Option<f64>,
    /// cdp-acc score rule: shortest or nested.
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or markdown.
    #[arg(long)]
    pub format: Option<String>,
    /// Synthetic scenario name instead of --cal/--test.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub n_cal: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Scales synthetic quantile bands or sigmas.
    #[arg(long)]
    pub width_scale: Option<f64>,
}

impl CommonArgs {
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            method: self.method.clone(),
            alpha: self.alpha,
            cal: self.cal.clone(),
            test: self.test.clone(),
            schema: self.schema.clone(),
            bins: self.bins,
            hist_bins: self.hist_bins,
            bounds: self.bounds.clone(),
            range: self.range.clone(),
            bdi: self.bdi.then_some(true),
            n_min: self.n_min,
            seed: self.seed,
            tie_noise: self.tie_noise,
            rule: self.rule.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
            scenario: self.scenario.clone().map(crate::config::ScenarioField::Named),
            n_cal: self.n_cal,
            n_test: self.n_test,
            width_scale: self.width_scale,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated methods, all run on the same data.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// One TOML file per method; repeatable.
    #[arg(long)]
    pub config: Vec<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bin counts to try; defaults to 1..=20.
    #[arg(long, value_delimiter = ',')]
    pub m_values: Vec<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Artifact written by `calibrate` or `run`.
    #[arg(long)]
    pub calibration: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
