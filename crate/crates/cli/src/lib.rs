//! Command-line front end: `run`, `compare`, `sweep-m`, `calibrate` and
//! `predict`.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

use args::{Cli, Command, CommonArgs};
pub use commands::{cmd_compare, cmd_run, cmd_sweep_m, compare, load_data, run, sweep_m};
pub use config::{DataSource, Method, RawConfig, RunConfig};
pub use error::{CliError, CliResult};

fn base_config(file: Option<&Path>, flags: &CommonArgs) -> CliResult<RawConfig> {
    let base = match file {
        Some(p) => RawConfig::from_toml_file(p)?,
        None => RawConfig::default(),
    };
    Ok(base.overlay(&flags.to_raw()))
}

/// Every config a `compare` invocation describes.
pub fn compare_configs(
    methods: &[String],
    files: &[std::path::PathBuf],
    flags: &CommonArgs,
) -> CliResult<Vec<RunConfig>> {
    if !methods.is_empty() {
        if files.len() > 1 {
            return Err(CliError::Validation("--methods takes at most one --config".into()));
        }
        let base = base_config(files.first().map(|p| p.as_path()), flags)?;
        return methods
            .iter()
            .map(|m| RawConfig { method: Some(m.trim().to_string()), schema: None, ..base.clone() }.resolve())
            .collect();
    }
    if files.is_empty() {
        return Err(CliError::Validation("compare needs --methods or at least one --config".into()));
    }
    files.iter().map(|f| base_config(Some(f), flags)?.resolve()).collect()
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run(a) => {
            let config = base_config(a.config.as_deref(), &a.common)?.resolve()?;
            let out = cmd_run(&config)?;
            let r = &out.report;
            println!(
                "{}: n_test={} picp={:.4} mpiw={:.4} ssc={:.4} -> {}",
                r.method,
                r.n_test,
                r.picp,
                r.mpiw,
                r.ssc,
                config.out.display()
            );
            for g in r.empty_groups() {
                eprintln!("warning: group {g} has no test labels and is excluded from SSC");
            }
        }
        Command::Compare(a) => {
            let configs = compare_configs(&a.methods, &a.config, &a.common)?;
            for r in cmd_compare(&configs)? {
                println!("{}: picp={:.4} mpiw={:.4} ssc={:.4}", r.method, r.picp, r.mpiw, r.ssc);
            }
        }
        Command::SweepM(a) => {
            let config = base_config(a.config.as_deref(), &a.common)?.resolve()?;
            let m_values = if a.m_values.is_empty() { (1..=20).collect() } else { a.m_values };
            let rows = cmd_sweep_m(&config, &m_values)?;
            match rows.iter().find(|r| r.selected) {
                Some(r) => println!("selected M={} (picp={:.4} mpiw={:.4})", r.bins, r.picp, r.mpiw),
                None => println!("no M reached coverage {:.4}", config.alpha.coverage()),
            }
        }
        Command::Calibrate(a) => {
            let config = base_config(a.config.as_deref(), &a.common)?.resolve()?;
            let artifact = commands::cmd_calibrate(&config)?;
            println!("{} calibration -> {}", artifact.method(), config.out.join("calibration.txt").display());
        }
        Command::Predict(a) => {
            let p = commands::cmd_predict(&a.calibration, &a.test, &a.out)?;
            println!("{} intervals -> {}", p.intervals.len(), a.out.join("intervals.csv").display());
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
