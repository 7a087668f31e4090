//! Comparison of an identified curve against the curve a simulation used.

use std::fmt;

use crate::estimator::SaturationEstimate;
use crate::sim::SaturationCurve;

/// Default acceptance ceiling on the qualified-bin error, per-unit flux.
pub const DEFAULT_THRESHOLD: f64 = 0.02;

/// Which bins count toward the reported maximum error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualificationRule {
    pub min_visits: usize,
    /// Minimum `|lambda_pu|` of the true curve at the bin centre. The
    /// low-flux region fills in slowly from the zero initial guess.
    pub min_flux: f64,
}

impl Default for QualificationRule {
    fn default() -> Self {
        Self {
            min_visits: 10,
            min_flux: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub bin: i64,
    /// Bin left edge, per-unit current.
    pub x: f64,
    /// Bin centre, where the true curve is evaluated.
    pub x_center: f64,
    pub lambda_estimated: f64,
    pub lambda_true: f64,
    pub abs_error: f64,
    pub visits: usize,
    pub qualified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub rule: QualificationRule,
    /// `None` when no bin qualifies.
    pub max_error: Option<f64>,
    pub a_hat: f64,
    pub rc_hat: Option<f64>,
    pub cycles_processed: usize,
    pub last_update_delta: f64,
}

impl RunReport {
    /// Compares every bin against `truth` evaluated at the bin centre.
    pub fn compare(
        estimate: &SaturationEstimate,
        truth: &SaturationCurve,
        rule: QualificationRule,
        a_hat: f64,
        rc_hat: Option<f64>,
    ) -> Self {
        let rows: Vec<ReportRow> = estimate
            .iter()
            .map(|(p, bin)| {
                let x_center = (p as f64 + 0.5) * estimate.bin_width;
                let lambda_true = truth.flux_of_current(x_center);
                ReportRow {
                    bin: p,
                    x: bin.x,
                    x_center,
                    lambda_estimated: bin.lambda_pu,
                    lambda_true,
                    abs_error: (bin.lambda_pu - lambda_true).abs(),
                    visits: bin.visits,
                    qualified: bin.visits >= rule.min_visits && lambda_true.abs() >= rule.min_flux,
                }
            })
            .collect();
        let max_error = rows
            .iter()
            .filter(|r| r.qualified)
            .map(|r| r.abs_error)
            .reduce(f64::max);
        Self {
            rows,
            rule,
            max_error,
            a_hat,
            rc_hat,
            cycles_processed: estimate.cycles_processed,
            last_update_delta: estimate.last_update_delta,
        }
    }

    pub fn qualified_count(&self) -> usize {
        self.rows.iter().filter(|r| r.qualified).count()
    }

    /// True when the maximum qualified error is within `threshold`. A run
    /// with no qualified bins only passes an infinite threshold.
    pub fn passes(&self, threshold: f64) -> bool {
        match self.max_error {
            Some(e) => e <= threshold,
            None => threshold == f64::INFINITY,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "bin,x_pu,x_center_pu,lambda_est_pu,lambda_true_pu,abs_error_pu,visits,qualified\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.bin,
                r.x,
                r.x_center,
                r.lambda_estimated,
                r.lambda_true,
                r.abs_error,
                r.visits,
                r.qualified as u8
            ));
        }
        out
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bins estimated      : {}", self.rows.len())?;
        writeln!(
            f,
            "qualified bins      : {} (visits >= {}, |true lambda| >= {} pu)",
            self.qualified_count(),
            self.rule.min_visits,
            self.rule.min_flux
        )?;
        match self.max_error {
            Some(e) => writeln!(f, "max qualified error : {e:.6} pu")?,
            None => writeln!(f, "max qualified error : n/a (no qualified bins)")?,
        }
        writeln!(f, "a_hat               : {:.6}", self.a_hat)?;
        match self.rc_hat {
            Some(rc) => writeln!(f, "Rc_hat              : {rc:.6} ohm")?,
            None => writeln!(f, "Rc_hat              : n/a")?,
        }
        writeln!(f, "cycles processed    : {}", self.cycles_processed)?;
        write!(f, "last update delta   : {:.3e} pu", self.last_update_delta)
    }
}
