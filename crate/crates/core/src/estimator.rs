//! Saturation-curve identification from terminal waveforms.
//!
//! Pipeline:
//!
//! 1. Integrate the winding KVL equations so the leakage inductances appear as
//!    plain current terms. This gives the shunt flux `Vx` on the secondary side
//!    and `Vxp` on the primary side of the ideal transformer.
//! 2. Difference them back to voltages `vx`, `vxp`.
//! 3. Turns ratio from the ratio of peak magnitudes, shunt current
//!    `ix = a i1 - i2`, optional core-loss split `im = ix - vx / Rc`.
//! 4. Each whole cycle, bin `(im, Vx)` in per-unit by current and average the
//!    flux per bin, then fold the cycle into a running estimate with the
//!    first-order recursion `h_k = (beta h_{k-1} + h_k^o) / (1 + beta)`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::ops::Range;

use crate::error::{param_err, Error, Result};
use crate::signals::{
    differentiate, leaky_integrate, make_cycle_windows, max_abs, mean, samples_per_cycle,
    CycleWindows, SampledSignal,
};
use crate::sim::{TerminalRecord, TransformerParams};

pub const DEFAULT_GAMMA: f64 = 1e-4;
pub const DEFAULT_BETA: f64 = 99.0;
pub const DEFAULT_BIN_WIDTH: f64 = 0.01;
pub const DEFAULT_SETTLE_CYCLES: usize = 10;

/// Minimum number of whole cycles required after the settle window.
pub const MIN_ESTIMATION_CYCLES: usize = 5;

/// How the core-loss current is separated from the magnetizing current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoreLossMode {
    /// `im ~= ix`: the loss current is neglected.
    Approximate,
    /// `Rc = E(vx^2) / E(ix vx)` and `im = ix - vx / Rc`.
    #[default]
    Exact,
}

/// Estimator settings and the known series impedances (SI units).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub gamma: f64,
    pub beta: f64,
    /// Per-unit current step between bins.
    pub bin_width: f64,
    pub settle_cycles: usize,
    pub r1: f64,
    pub l1: f64,
    pub r2: f64,
    pub l2: f64,
    pub omega: f64,
    pub vb2: f64,
    pub ib2: f64,
    pub core_loss_mode: CoreLossMode,
}

impl EstimationConfig {
    /// Default estimator settings for a transformer with the given series
    /// impedances and bases.
    pub fn new(r1: f64, l1: f64, r2: f64, l2: f64, omega: f64, vb2: f64, ib2: f64) -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            beta: DEFAULT_BETA,
            bin_width: DEFAULT_BIN_WIDTH,
            settle_cycles: DEFAULT_SETTLE_CYCLES,
            r1,
            l1,
            r2,
            l2,
            omega,
            vb2,
            ib2,
            core_loss_mode: CoreLossMode::Exact,
        }
    }

    /// Takes the known impedances and bases from a simulator parameter set.
    pub fn from_params(p: &TransformerParams) -> Self {
        Self::new(p.r1, p.l1, p.r2, p.l2, p.omega, p.vb2, p.ib2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return param_err(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.beta.is_finite() && self.beta >= 1.0) {
            return param_err(format!("beta must be >= 1, got {}", self.beta));
        }
        for (name, v) in [
            ("bin_width", self.bin_width),
            ("omega", self.omega),
            ("Vb2", self.vb2),
            ("Ib2", self.ib2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return param_err(format!("{name} must be positive, got {v}"));
            }
        }
        // Zero series impedance is allowed: it models an ideal winding.
        for (name, v) in [
            ("R1", self.r1),
            ("L1", self.l1),
            ("R2", self.r2),
            ("L2", self.l2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return param_err(format!("{name} must be non-negative, got {v}"));
            }
        }
        Ok(())
    }

    pub fn line_frequency(&self) -> f64 {
        self.omega / (2.0 * std::f64::consts::PI)
    }
}

/// Integral-domain signals.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxIntegrals {
    /// Secondary-side shunt flux `Vx`, volt-seconds.
    pub vx_int: SampledSignal,
    /// Primary-side ideal-transformer flux `Vxp`, volt-seconds.
    pub vxp_int: SampledSignal,
    pub i1_int: SampledSignal,
    pub i2_int: SampledSignal,
}

/// Every intermediate of [`estimate`], for inspection and plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct IntermediateSignals {
    pub vx_int: SampledSignal,
    pub vxp_int: SampledSignal,
    pub i1_int: SampledSignal,
    pub i2_int: SampledSignal,
    pub vx: SampledSignal,
    pub vxp: SampledSignal,
    pub ix: SampledSignal,
    /// Core-loss current `vx / Rc` (zero in approximate mode).
    pub ie: SampledSignal,
    pub im: SampledSignal,
    pub a_hat: f64,
    /// Always present in exact mode; in approximate mode it is reported when
    /// the loss power is measurable.
    pub rc_hat: Option<f64>,
    pub windows: CycleWindows,
}

/// One regression bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinEstimate {
    /// Left edge of the bin, `p * bin_width`, per-unit current.
    pub x: f64,
    pub lambda_pu: f64,
    /// Number of cycles that contributed to this bin.
    pub visits: usize,
}

/// The identified saturation curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationEstimate {
    pub bin_width: f64,
    /// Keyed by bin index `p`; only bins that received samples are present.
    pub bins: BTreeMap<i64, BinEstimate>,
    /// Largest per-bin change made by the last processed cycle.
    pub last_update_delta: f64,
    pub cycles_processed: usize,
}

impl SaturationEstimate {
    pub fn get(&self, p: i64) -> Option<&BinEstimate> {
        self.bins.get(&p)
    }

    /// Bins in increasing order of current.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &BinEstimate)> {
        self.bins.iter().map(|(&p, b)| (p, b))
    }
}

/// Per-bin values keyed by bin index.
pub type BinMap = BTreeMap<i64, f64>;

/// Integrates both KVL equations:
/// `Vx = V2 + R2 I2 + L2 i2`, `Vxp = V1 - R1 I1 - L1 i1`, with upper-case
/// names denoting leaky integrals.
pub fn compute_flux_integrals(
    record: &TerminalRecord,
    config: &EstimationConfig,
) -> Result<FluxIntegrals> {
    config.validate()?;
    let g = config.gamma;
    let v1_int = leaky_integrate(record.v1(), g)?;
    let v2_int = leaky_integrate(record.v2(), g)?;
    let i1_int = leaky_integrate(record.i1(), g)?;
    let i2_int = leaky_integrate(record.i2(), g)?;

    let (r1, l1, r2, l2) = (config.r1, config.l1, config.r2, config.l2);
    let vx_int = SampledSignal::new(
        (0..record.len())
            .map(|n| v2_int.samples()[n] + r2 * i2_int.samples()[n] + l2 * record.i2().samples()[n])
            .collect(),
        record.sample_period(),
    )?;
    let vxp_int = SampledSignal::new(
        (0..record.len())
            .map(|n| v1_int.samples()[n] - r1 * i1_int.samples()[n] - l1 * record.i1().samples()[n])
            .collect(),
        record.sample_period(),
    )?;
    Ok(FluxIntegrals {
        vx_int,
        vxp_int,
        i1_int,
        i2_int,
    })
}

/// First differences of the two flux signals: `(vx, vxp)`.
pub fn recover_internal_voltages(
    vx_int: &SampledSignal,
    vxp_int: &SampledSignal,
) -> (SampledSignal, SampledSignal) {
    (differentiate(vx_int), differentiate(vxp_int))
}

/// `a = max|vxp| / max|vx|` over the windowed (post-settle) region.
pub fn estimate_turns_ratio(
    vx: &SampledSignal,
    vxp: &SampledSignal,
    windows: &CycleWindows,
) -> Result<f64> {
    let region = windows.span();
    if region.is_empty() {
        return param_err("no whole cycles to estimate the turns ratio over");
    }
    let den = max_abs(vx, region.clone())?;
    if den == 0.0 {
        return Err(Error::DegenerateSignal(
            "shunt voltage vx is identically zero after settling".into(),
        ));
    }
    Ok(max_abs(vxp, region)? / den)
}

/// `ix = a i1 - i2`.
pub fn compute_excitation_current(
    i1: &SampledSignal,
    i2: &SampledSignal,
    a_hat: f64,
) -> Result<SampledSignal> {
    i1.zip_with(i2, |p, s| a_hat * p - s)
}

/// `Rc = E(vx^2) / E(ix vx)` over the whole post-settle cycles.
pub fn estimate_core_loss_resistance(
    vx: &SampledSignal,
    ix: &SampledSignal,
    windows: &CycleWindows,
) -> Result<f64> {
    let region = windows.span();
    if region.is_empty() {
        return param_err("no whole cycles to estimate the core loss over");
    }
    let v2 = vx.map(|v| v * v)?;
    let p = ix.zip_with(vx, |i, v| i * v)?;
    let power = mean(&p, region.clone())?;
    if power.is_nan() || power <= 0.0 {
        return Err(Error::DegenerateSignal(format!(
            "mean shunt power {power} is not positive; core loss is not measurable"
        )));
    }
    Ok(mean(&v2, region)? / power)
}

/// Splits the loss current off the shunt current. In approximate mode the
/// shunt current is returned unchanged and `rc_hat` is ignored.
pub fn compute_magnetizing_current(
    ix: &SampledSignal,
    vx: &SampledSignal,
    rc_hat: f64,
    mode: CoreLossMode,
) -> Result<SampledSignal> {
    match mode {
        CoreLossMode::Approximate => Ok(ix.clone()),
        CoreLossMode::Exact => {
            if !(rc_hat.is_finite() && rc_hat > 0.0) {
                return param_err(format!(
                    "core-loss resistance must be positive, got {rc_hat}"
                ));
            }
            ix.zip_with(vx, |i, v| i - v / rc_hat)
        }
    }
}

/// Bins one cycle: sample `n` goes to bin `floor(x_n / bin_width)` with
/// `x_n = im / (sqrt2 Ib2)`, and each bin's value is the mean of
/// `y_n = omega Vx / (sqrt2 Vb2)` over its samples. Empty bins are absent.
pub fn bin_cycle(
    vx_int: &SampledSignal,
    im: &SampledSignal,
    window: Range<usize>,
    config: &EstimationConfig,
) -> Result<BinMap> {
    if window.end > vx_int.len() || window.end > im.len() || window.start > window.end {
        return param_err(format!(
            "window {window:?} is outside signals of length {} / {}",
            vx_int.len(),
            im.len()
        ));
    }
    let current_base = SQRT_2 * config.ib2;
    let flux_scale = config.omega / (SQRT_2 * config.vb2);
    let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for n in window {
        let x = im.samples()[n] / current_base;
        let y = flux_scale * vx_int.samples()[n];
        let p = (x / config.bin_width).floor() as i64;
        let e = acc.entry(p).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(p, (sum, count))| (p, sum / count as f64))
        .collect())
}

/// One step of `(1 + beta) h_k - beta h_{k-1} = h_k^o` for the bins present in
/// `h_cycle`; other bins keep their previous value. Unseen bins start at 0.
pub fn smooth_update(h_prev: &BinMap, h_cycle: &BinMap, beta: f64) -> BinMap {
    let mut next = h_prev.clone();
    for (&p, &obs) in h_cycle {
        let prev = h_prev.get(&p).copied().unwrap_or(0.0);
        next.insert(p, (beta * prev + obs) / (1.0 + beta));
    }
    next
}

/// Runs the full identification pipeline on a recording.
pub fn estimate(
    record: &TerminalRecord,
    config: &EstimationConfig,
) -> Result<(SaturationEstimate, IntermediateSignals)> {
    config.validate()?;
    let tb = record.sample_period();
    let f_line = config.line_frequency();
    let spc = samples_per_cycle(tb, f_line)?;
    let needed = (config.settle_cycles + MIN_ESTIMATION_CYCLES) * spc;
    if record.len() < needed {
        return param_err(format!(
            "record too short: {} samples ({:.2} cycles), need {} settle + {} estimation cycles",
            record.len(),
            record.len() as f64 / spc as f64,
            config.settle_cycles,
            MIN_ESTIMATION_CYCLES
        ));
    }
    let windows = make_cycle_windows(record.len(), tb, f_line, config.settle_cycles)?;

    let FluxIntegrals {
        vx_int,
        vxp_int,
        i1_int,
        i2_int,
    } = compute_flux_integrals(record, config)?;
    let (vx, vxp) = recover_internal_voltages(&vx_int, &vxp_int);
    let a_hat = estimate_turns_ratio(&vx, &vxp, &windows)?;
    let ix = compute_excitation_current(record.i1(), record.i2(), a_hat)?;
    let rc_hat = match config.core_loss_mode {
        CoreLossMode::Exact => Some(estimate_core_loss_resistance(&vx, &ix, &windows)?),
        CoreLossMode::Approximate => estimate_core_loss_resistance(&vx, &ix, &windows).ok(),
    };
    let im =
        compute_magnetizing_current(&ix, &vx, rc_hat.unwrap_or(f64::NAN), config.core_loss_mode)?;
    let ie = ix.zip_with(&im, |x, m| x - m)?;

    let mut h = BinMap::new();
    let mut visits: BTreeMap<i64, usize> = BTreeMap::new();
    let mut last_update_delta = 0.0;
    for window in &windows.windows {
        let cycle = bin_cycle(&vx_int, &im, window.clone(), config)?;
        let next = smooth_update(&h, &cycle, config.beta);
        last_update_delta = cycle
            .keys()
            .map(|p| (next[p] - h.get(p).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max);
        for p in cycle.keys() {
            *visits.entry(*p).or_default() += 1;
        }
        h = next;
    }
    log::debug!(
        "estimated a = {a_hat}, Rc = {rc_hat:?} over {} cycles, last delta {last_update_delta:e}",
        windows.len()
    );

    let bins = h
        .iter()
        .map(|(&p, &lambda_pu)| {
            (
                p,
                BinEstimate {
                    x: p as f64 * config.bin_width,
                    lambda_pu,
                    visits: visits.get(&p).copied().unwrap_or(0),
                },
            )
        })
        .collect();
    let estimate = SaturationEstimate {
        bin_width: config.bin_width,
        bins,
        last_update_delta,
        cycles_processed: windows.len(),
    };
    let signals = IntermediateSignals {
        vx_int,
        vxp_int,
        i1_int,
        i2_int,
        vx,
        vxp,
        ix,
        ie,
        im,
        a_hat,
        rc_hat,
        windows,
    };
    Ok((estimate, signals))
}
