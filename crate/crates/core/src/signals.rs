//! Discrete-time signal primitives.
//!
//! Every operation here is a pure function of immutable inputs. Integrals and
//! derivatives use a zero initial state (`F[-1] = 0`), so a recording is
//! treated as if it started from rest at its first sample.

use std::ops::Range;

use crate::error::{param_err, Result};

/// A uniformly sampled, finite, real-valued time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    sample_period: f64,
}

impl SampledSignal {
    /// Wraps `samples` taken every `sample_period` seconds.
    ///
    /// Fails if the period is not strictly positive and finite, or if any
    /// sample is NaN or infinite.
    pub fn new(samples: Vec<f64>, sample_period: f64) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return param_err(format!(
                "sample period must be positive, got {sample_period}"
            ));
        }
        if let Some(n) = samples.iter().position(|s| !s.is_finite()) {
            return param_err(format!("sample {n} is not finite ({})", samples[n]));
        }
        Ok(Self {
            samples,
            sample_period,
        })
    }

    pub fn zeros(len: usize, sample_period: f64) -> Result<Self> {
        Self::new(vec![0.0; len], sample_period)
    }

    /// Builds a signal by evaluating `f` at `t = n * sample_period`.
    pub fn from_fn(len: usize, sample_period: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            (0..len).map(|n| f(n as f64 * sample_period)).collect(),
            sample_period,
        )
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Applies `f` sample by sample, keeping the sample period.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|&s| f(s)).collect(),
            self.sample_period,
        )
    }

    /// Combines two equally long signals sample by sample.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.len() != other.len() {
            return param_err(format!(
                "signal lengths differ ({} vs {})",
                self.len(),
                other.len()
            ));
        }
        Self::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            self.sample_period,
        )
    }
}

/// Discrete leaky integral `F[n] = (1 - gamma) F[n-1] + T_b f[n]`, `F[-1] = 0`.
///
/// `gamma = 0` gives the plain rectangular running sum. A small positive
/// `gamma` bounds the output for bounded input at the cost of a slight phase
/// lead of roughly `gamma / (omega T_b)` radians at angular frequency `omega`.
pub fn leaky_integrate(f: &SampledSignal, gamma: f64) -> Result<SampledSignal> {
    if !(0.0..1.0).contains(&gamma) {
        return param_err(format!("leak factor gamma must lie in [0, 1), got {gamma}"));
    }
    let decay = 1.0 - gamma;
    let tb = f.sample_period;
    let mut acc = 0.0;
    let out = f
        .samples
        .iter()
        .map(|&x| {
            acc = decay * acc + tb * x;
            acc
        })
        .collect();
    SampledSignal::new(out, tb)
}

/// First difference `v[n] = (F[n] - F[n-1]) / T_b` with `F[-1] = 0`.
pub fn differentiate(big_f: &SampledSignal) -> SampledSignal {
    let tb = big_f.sample_period;
    let mut prev = 0.0;
    let out = big_f
        .samples
        .iter()
        .map(|&x| {
            let d = (x - prev) / tb;
            prev = x;
            d
        })
        .collect();
    SampledSignal {
        samples: out,
        sample_period: tb,
    }
}

fn checked_slice<'a>(f: &'a SampledSignal, range: &Range<usize>) -> Result<&'a [f64]> {
    if range.start >= range.end {
        return param_err(format!("empty sample range {range:?}"));
    }
    if range.end > f.len() {
        return param_err(format!(
            "sample range {range:?} exceeds signal length {}",
            f.len()
        ));
    }
    Ok(&f.samples[range.clone()])
}

/// Arithmetic mean over `range`.
pub fn mean(f: &SampledSignal, range: Range<usize>) -> Result<f64> {
    let s = checked_slice(f, &range)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Largest `|f[n]|` over `range`.
pub fn max_abs(f: &SampledSignal, range: Range<usize>) -> Result<f64> {
    let s = checked_slice(f, &range)?;
    Ok(s.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

/// Whole-cycle tiling of a recording after a settling prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleWindows {
    pub line_frequency: f64,
    pub samples_per_cycle: usize,
    pub windows: Vec<Range<usize>>,
}

impl CycleWindows {
    /// The contiguous index range covered by all windows.
    pub fn span(&self) -> Range<usize> {
        match (self.windows.first(), self.windows.last()) {
            (Some(first), Some(last)) => first.start..last.end,
            _ => 0..0,
        }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Samples per fundamental cycle, `round(1 / (f T_b))`.
pub fn samples_per_cycle(sample_period: f64, line_frequency: f64) -> Result<usize> {
    if !(line_frequency.is_finite() && line_frequency > 0.0) {
        return param_err(format!(
            "line frequency must be positive, got {line_frequency}"
        ));
    }
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return param_err(format!(
            "sample period must be positive, got {sample_period}"
        ));
    }
    let n = (1.0 / (line_frequency * sample_period)).round();
    if n.is_nan() || n < 8.0 {
        return param_err(format!(
            "need at least 8 samples per cycle, got {n} ({line_frequency} Hz at {sample_period} s)"
        ));
    }
    Ok(n as usize)
}

/// Tiles `[settle_cycles * N, ..)` with whole cycles of `N` samples; a trailing
/// partial cycle is dropped.
pub fn make_cycle_windows(
    signal_length: usize,
    sample_period: f64,
    line_frequency: f64,
    settle_cycles: usize,
) -> Result<CycleWindows> {
    let spc = samples_per_cycle(sample_period, line_frequency)?;
    let start = settle_cycles * spc;
    let count = signal_length.saturating_sub(start) / spc;
    if count == 0 {
        return param_err(format!(
            "signal of {signal_length} samples is too short for one {spc}-sample cycle after {settle_cycles} settle cycles"
        ));
    }
    let windows = (0..count)
        .map(|k| start + k * spc..start + (k + 1) * spc)
        .collect();
    Ok(CycleWindows {
        line_frequency,
        samples_per_cycle: spc,
        windows,
    })
}
