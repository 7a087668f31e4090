//! The `satcurve` workflows: simulate, estimate and the closed-loop run.
//!
//! Exit codes: 0 success, 1 acceptance-threshold failure, 2 usage, I/O or
//! parse error, 3 numerical failure (divergence or a degenerate signal).

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::estimator::{estimate, SaturationEstimate};
use crate::report::RunReport;
use crate::sim::TerminalRecord;
use crate::waveform::{self, WaveformError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Waveform(#[from] WaveformError),

    #[error(transparent)]
    Numerical(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Waveform(_) => 2,
            CliError::Numerical(crate::Error::Parameter(_)) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Simulates the configured circuit and writes the waveform CSV.
pub fn cmd_simulate(config: &Path, out: &Path) -> Result<TerminalRecord, CliError> {
    let cfg = Config::load(config)?;
    let record = cfg.simulation()?.run()?.record;
    waveform::write_waveform(out, &record)?;
    log::info!("wrote {} samples to {}", record.len(), out.display());
    Ok(record)
}

/// What `satcurve estimate` prints.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSummary {
    pub a_hat: f64,
    pub rc_hat: Option<f64>,
    pub last_update_delta: f64,
    pub cycles_processed: usize,
    pub bins: usize,
}

impl fmt::Display for EstimateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a_hat = {}", self.a_hat)?;
        match self.rc_hat {
            Some(rc) => writeln!(f, "Rc_hat = {rc}")?,
            None => writeln!(f, "Rc_hat = n/a")?,
        }
        writeln!(f, "last_update_delta = {}", self.last_update_delta)?;
        writeln!(f, "cycles_processed = {}", self.cycles_processed)?;
        write!(f, "bins = {}", self.bins)
    }
}

fn summarize(est: &SaturationEstimate, a_hat: f64, rc_hat: Option<f64>) -> EstimateSummary {
    EstimateSummary {
        a_hat,
        rc_hat,
        last_update_delta: est.last_update_delta,
        cycles_processed: est.cycles_processed,
        bins: est.bins.len(),
    }
}

/// Identifies the curve from a waveform CSV and writes the curve CSV.
pub fn cmd_estimate(
    waveform_path: &Path,
    config: &Path,
    out: &Path,
) -> Result<EstimateSummary, CliError> {
    let cfg = Config::load(config)?;
    let est_cfg = cfg.estimation()?;
    let record = waveform::read_waveform(waveform_path)?;
    let (est, sig) = estimate(&record, &est_cfg)?;
    waveform::write_curve(out, &est)?;
    Ok(summarize(&est, sig.a_hat, sig.rc_hat))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub threshold: f64,
    pub passed: bool,
    pub summary_path: PathBuf,
}

/// `<report>.summary.txt` next to the CSV report.
pub fn summary_path(report: &Path) -> PathBuf {
    let mut name = report
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "report".into());
    name.push(".summary.txt");
    report.with_file_name(name)
}

/// Simulate, estimate, and compare against the simulated curve. The report
/// is written whether or not the threshold is met.
pub fn cmd_run(
    config: &Path,
    report_path: &Path,
    threshold: Option<f64>,
) -> Result<RunOutcome, CliError> {
    let cfg = Config::load(config)?;
    let sim = cfg.simulation()?;
    let est_cfg = cfg.estimation()?;
    let rule = cfg.qualification()?;
    let threshold = match threshold {
        Some(t) => t,
        None => cfg.threshold()?,
    };

    let out = sim.run()?;
    let (est, sig) = estimate(&out.record, &est_cfg)?;
    let report = RunReport::compare(&est, &sim.curve, rule, sig.a_hat, sig.rc_hat);
    let passed = report.passes(threshold);

    let summary = format!(
        "{report}\nthreshold           : {threshold} pu\nresult              : {}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let summary_path = summary_path(report_path);
    waveform::write_atomic(report_path, report.to_csv().as_bytes())?;
    waveform::write_atomic(&summary_path, summary.as_bytes())?;
    Ok(RunOutcome {
        report,
        threshold,
        passed,
        summary_path,
    })
}
