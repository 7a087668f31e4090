#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use satcurve::estimator::{CoreLossMode, EstimationConfig};
use satcurve::sim::{LoadSpec, SaturationCurve, Simulation, SourceSpec, TransformerParams};

pub const OMEGA: f64 = 100.0 * PI;
pub const SAMPLE_PERIOD: f64 = 5e-5;
pub const TURNS_RATIO: f64 = 55.0;

/// Peak primary voltage. Puts the steady flux peak near 1.14 pu, so the
/// largest magnetizing current lands mid-bin.
pub const SOURCE_AMPLITUDE: f64 = 35_600.0;

/// 50 kVA, 22 kV / 400 V, series impedances referred to each side.
pub fn params(rc: f64) -> TransformerParams {
    TransformerParams {
        r1: 48.4,
        l1: 193.6 / OMEGA,
        r2: 0.016,
        l2: 0.064 / OMEGA,
        rc,
        turns_ratio: TURNS_RATIO,
        vb2: 400.0,
        ib2: 125.0,
        omega: OMEGA,
    }
}

pub fn saturating_curve() -> SaturationCurve {
    SaturationCurve::new(vec![(0.0, 0.0), (0.02, 0.6), (0.06, 0.95), (0.3, 1.25)]).unwrap()
}

pub fn source(amplitude: f64) -> SourceSpec {
    SourceSpec {
        amplitude,
        frequency: OMEGA / (2.0 * PI),
        phase: FRAC_PI_2,
    }
}

pub fn simulation(rc: f64, curve: SaturationCurve, load: LoadSpec, cycles: usize) -> Simulation {
    Simulation::new(
        params(rc),
        curve,
        load,
        source(SOURCE_AMPLITUDE),
        cycles as f64 / 50.0,
        SAMPLE_PERIOD,
    )
}

pub fn estimation(rc: f64, mode: CoreLossMode) -> EstimationConfig {
    let mut c = EstimationConfig::from_params(&params(rc));
    c.core_loss_mode = mode;
    c
}

/// Harmonic distortion of whole cycles of `x`, from a direct DFT at the
/// fundamental and its first 50 harmonics.
pub fn thd(x: &[f64], samples_per_cycle: usize) -> f64 {
    let cycles = x.len() / samples_per_cycle;
    let x = &x[..cycles * samples_per_cycle];
    let n = x.len() as f64;
    let magnitude = |k: usize| {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &v) in x.iter().enumerate() {
            let phi = 2.0 * PI * (k * j) as f64 / n;
            re += v * phi.cos();
            im -= v * phi.sin();
        }
        re.hypot(im)
    };
    let fundamental = magnitude(cycles);
    let harmonics: f64 = (2..=50).map(|h| magnitude(h * cycles).powi(2)).sum();
    harmonics.sqrt() / fundamental
}

pub fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
