//! Time-domain simulation of a single-phase transformer with a lossy,
//! saturable core.
//!
//! The circuit is the usual T model: primary series `R1 + L1`, an ideal
//! `a : 1` transformer, a shunt branch (core-loss resistor `Rc` in parallel
//! with the nonlinear magnetizing inductor) and secondary series `R2 + L2`
//! feeding the load. All shunt quantities are referred to the secondary.
//! The state is `(i1, i2, lambda)` where `lambda` is the core flux linkage, so
//! `d lambda / dt` is the shunt voltage `vx` and the nonlinearity stays
//! algebraic:
//!
//! ```text
//! d lambda/dt = Rc (a i1 - i2 - h_inv(lambda))
//! d i1/dt     = (v1(t) - a d lambda/dt - R1 i1) / L1
//! d i2/dt     = (d lambda/dt - R2 i2 - v_load) / L2
//! ```

use std::f64::consts::{PI, SQRT_2};

use log::{debug, warn};

use crate::error::{param_err, Error, Result};
use crate::signals::SampledSignal;

/// Known circuit constants, SI units. Shunt quantities are secondary-referred.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerParams {
    pub r1: f64,
    pub l1: f64,
    pub r2: f64,
    pub l2: f64,
    /// Core-loss resistance, ohms, referred to the secondary.
    pub rc: f64,
    /// Primary-to-secondary voltage ratio `a`.
    pub turns_ratio: f64,
    /// Secondary voltage base, volts RMS.
    pub vb2: f64,
    /// Secondary current base, amperes RMS.
    pub ib2: f64,
    /// Line angular frequency, rad/s.
    pub omega: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        param_err(format!("{name} must be positive and finite, got {v}"))
    }
}

impl TransformerParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("R1", self.r1)?;
        check_positive("L1", self.l1)?;
        check_positive("R2", self.r2)?;
        check_positive("L2", self.l2)?;
        check_positive("Rc", self.rc)?;
        check_positive("a", self.turns_ratio)?;
        check_positive("Vb2", self.vb2)?;
        check_positive("Ib2", self.ib2)?;
        check_positive("omega", self.omega)
    }

    /// Flux linkage corresponding to 1 pu: `sqrt(2) Vb2 / omega`.
    pub fn flux_base(&self) -> f64 {
        SQRT_2 * self.vb2 / self.omega
    }

    /// Instantaneous current corresponding to 1 pu: `sqrt(2) Ib2`.
    pub fn current_base(&self) -> f64 {
        SQRT_2 * self.ib2
    }
}

/// Monotone piecewise-linear `lambda_pu = h(i_pu)`, odd-extended to negative
/// currents and slope-continued past the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationCurve {
    knots: Vec<(f64, f64)>,
}

impl SaturationCurve {
    /// Knots are `(i_pu, lambda_pu)` pairs. The first must be `(0, 0)` and both
    /// coordinates must be strictly increasing.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return param_err("a saturation curve needs at least 2 knots");
        }
        if knots[0] != (0.0, 0.0) {
            return param_err(format!("first knot must be (0, 0), got {:?}", knots[0]));
        }
        if knots.iter().any(|(i, l)| !i.is_finite() || !l.is_finite()) {
            return param_err("knots must be finite");
        }
        for (k, pair) in knots.windows(2).enumerate() {
            if !(pair[1].0 > pair[0].0 && pair[1].1 > pair[0].1) {
                return param_err(format!(
                    "knots must be strictly increasing in both coordinates (knot {} -> {})",
                    k,
                    k + 1
                ));
            }
        }
        Ok(Self { knots })
    }

    /// A single straight line through the origin with the given slope.
    pub fn linear(slope: f64) -> Result<Self> {
        Self::new(vec![(0.0, 0.0), (1.0, slope)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Per-unit flux for a per-unit magnetizing current.
    pub fn flux_of_current(&self, i_pu: f64) -> f64 {
        let x = i_pu.abs();
        // index of the segment [k-1, k] containing x, clamped to the last one
        let k = self
            .knots
            .partition_point(|&(i, _)| i < x)
            .clamp(1, self.knots.len() - 1);
        let (i0, l0) = self.knots[k - 1];
        let (i1, l1) = self.knots[k];
        let y = l0 + (l1 - l0) / (i1 - i0) * (x - i0);
        y.copysign(i_pu)
    }

    /// Per-unit magnetizing current for a per-unit flux; the exact inverse of
    /// [`flux_of_current`](Self::flux_of_current).
    pub fn current_of_flux(&self, lambda_pu: f64) -> f64 {
        let y = lambda_pu.abs();
        let k = self
            .knots
            .partition_point(|&(_, l)| l < y)
            .clamp(1, self.knots.len() - 1);
        let (i0, l0) = self.knots[k - 1];
        let (i1, l1) = self.knots[k];
        let x = i0 + (i1 - i0) / (l1 - l0) * (y - l0);
        x.copysign(lambda_pu)
    }

    /// Smallest segment slope `d lambda_pu / d i_pu` (the saturated slope).
    pub fn min_slope(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|p| (p[1].1 - p[0].1) / (p[1].0 - p[0].0))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadSpec {
    OpenCircuit,
    Resistive { r_load: f64 },
}

/// Sinusoidal primary voltage `amplitude * sin(2 pi f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    /// Peak volts.
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl SourceSpec {
    pub fn voltage(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
    }
}

/// Synchronized terminal waveforms. `i1` flows into the primary dotted
/// terminal, `i2` flows out of the secondary toward the load, `v2` is the
/// voltage across the load.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalRecord {
    v1: SampledSignal,
    i1: SampledSignal,
    v2: SampledSignal,
    i2: SampledSignal,
}

impl TerminalRecord {
    pub fn new(
        v1: SampledSignal,
        i1: SampledSignal,
        v2: SampledSignal,
        i2: SampledSignal,
    ) -> Result<Self> {
        let len = v1.len();
        let tb = v1.sample_period();
        for (name, s) in [("i1", &i1), ("v2", &v2), ("i2", &i2)] {
            if s.len() != len {
                return param_err(format!("{name} has {} samples, v1 has {len}", s.len()));
            }
            if s.sample_period() != tb {
                return param_err(format!(
                    "{name} sample period {} differs from v1's {tb}",
                    s.sample_period()
                ));
            }
        }
        Ok(Self { v1, i1, v2, i2 })
    }

    pub fn v1(&self) -> &SampledSignal {
        &self.v1
    }

    pub fn i1(&self) -> &SampledSignal {
        &self.i1
    }

    pub fn v2(&self) -> &SampledSignal {
        &self.v2
    }

    pub fn i2(&self) -> &SampledSignal {
        &self.i2
    }

    pub fn len(&self) -> usize {
        self.v1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v1.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        self.v1.sample_period()
    }
}

/// Internal shunt-branch signals, sampled alongside the terminal record.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreTraces {
    /// Core flux linkage `lambda`, volt-seconds.
    pub flux: SampledSignal,
    /// Shunt voltage `vx = d lambda / dt`, volts.
    pub vx: SampledSignal,
    /// Shunt current `ix = a i1 - i2`, amperes.
    pub ix: SampledSignal,
    /// Magnetizing current `im = h_inv(lambda)`, amperes.
    pub im: SampledSignal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub record: TerminalRecord,
    pub traces: CoreTraces,
    /// RK4 steps actually taken per output sample.
    pub substeps: usize,
}

pub const DEFAULT_SUBSTEPS: usize = 10;

// RK4's real-axis stability limit is about 2.785.
const RK4_STEP_BUDGET: f64 = 2.5;

/// A configured simulation run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub params: TransformerParams,
    pub curve: SaturationCurve,
    pub load: LoadSpec,
    pub source: SourceSpec,
    /// Seconds.
    pub duration: f64,
    pub sample_period: f64,
    /// Minimum RK4 steps per output sample. Raised automatically when the
    /// circuit's fastest mode would make the requested step unstable.
    pub substeps: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct State {
    i1: f64,
    i2: f64,
    flux: f64,
}

impl State {
    fn axpy(self, h: f64, d: State) -> State {
        State {
            i1: self.i1 + h * d.i1,
            i2: self.i2 + h * d.i2,
            flux: self.flux + h * d.flux,
        }
    }

    fn is_finite(&self) -> bool {
        self.i1.is_finite() && self.i2.is_finite() && self.flux.is_finite()
    }
}

struct Circuit<'a> {
    p: &'a TransformerParams,
    curve: &'a SaturationCurve,
    source: &'a SourceSpec,
    r_load: Option<f64>,
    flux_base: f64,
    current_base: f64,
}

impl Circuit<'_> {
    fn magnetizing_current(&self, flux: f64) -> f64 {
        self.current_base * self.curve.current_of_flux(flux / self.flux_base)
    }

    fn shunt_voltage(&self, s: &State) -> f64 {
        self.p.rc * (self.p.turns_ratio * s.i1 - s.i2 - self.magnetizing_current(s.flux))
    }

    fn derivative(&self, v1: f64, s: &State) -> State {
        let vx = self.shunt_voltage(s);
        let di1 = (v1 - self.p.turns_ratio * vx - self.p.r1 * s.i1) / self.p.l1;
        let di2 = match self.r_load {
            Some(rl) => (vx - (self.p.r2 + rl) * s.i2) / self.p.l2,
            None => 0.0,
        };
        State {
            i1: di1,
            i2: di2,
            flux: vx,
        }
    }

    fn rk4_step(&self, t: f64, h: f64, s: State) -> State {
        let v_start = self.source.voltage(t);
        let v_mid = self.source.voltage(t + 0.5 * h);
        let v_end = self.source.voltage(t + h);
        let k1 = self.derivative(v_start, &s);
        let k2 = self.derivative(v_mid, &s.axpy(0.5 * h, k1));
        let k3 = self.derivative(v_mid, &s.axpy(0.5 * h, k2));
        let k4 = self.derivative(v_end, &s.axpy(h, k3));
        State {
            i1: s.i1 + h / 6.0 * (k1.i1 + 2.0 * k2.i1 + 2.0 * k3.i1 + k4.i1),
            i2: s.i2 + h / 6.0 * (k1.i2 + 2.0 * k2.i2 + 2.0 * k3.i2 + k4.i2),
            flux: s.flux + h / 6.0 * (k1.flux + 2.0 * k2.flux + 2.0 * k3.flux + k4.flux),
        }
    }

    /// Upper bound on the magnitude of the Jacobian's eigenvalues.
    ///
    /// An RL network has real, negative eigenvalues, so `|trace|` bounds the
    /// spectral radius. The flux column uses the steepest slope of `h_inv`.
    fn stiffness_bound(&self) -> f64 {
        let p = self.p;
        let a = p.turns_ratio;
        let steepest_inverse = self.current_base / self.flux_base / self.curve.min_slope();
        let mut trace = (a * a * p.rc + p.r1) / p.l1 + p.rc * steepest_inverse;
        if let Some(rl) = self.r_load {
            trace += (p.rc + p.r2 + rl) / p.l2;
        }
        trace
    }
}

impl Simulation {
    pub fn new(
        params: TransformerParams,
        curve: SaturationCurve,
        load: LoadSpec,
        source: SourceSpec,
        duration: f64,
        sample_period: f64,
    ) -> Self {
        Self {
            params,
            curve,
            load,
            source,
            duration,
            sample_period,
            substeps: DEFAULT_SUBSTEPS,
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    /// Number of output samples, `round(duration / sample_period)`.
    pub fn sample_count(&self) -> usize {
        (self.duration / self.sample_period).round() as usize
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let LoadSpec::Resistive { r_load } = self.load {
            check_positive("R_load", r_load)?;
        }
        let s = &self.source;
        if !(s.amplitude.is_finite() && s.amplitude >= 0.0) {
            return param_err(format!(
                "source amplitude must be >= 0, got {}",
                s.amplitude
            ));
        }
        check_positive("source frequency", s.frequency)?;
        if !s.phase.is_finite() {
            return param_err("source phase must be finite");
        }
        check_positive("sample period", self.sample_period)?;
        check_positive("duration", self.duration)?;
        if self.substeps == 0 {
            return param_err("substeps must be at least 1");
        }
        let per_cycle = 1.0 / (s.frequency * self.sample_period);
        if per_cycle < 100.0 {
            return param_err(format!(
                "sample period gives {per_cycle:.1} samples per cycle, need at least 100"
            ));
        }
        if per_cycle < 1000.0 {
            warn!("only {per_cycle:.0} samples per source cycle; 1000 or more is recommended");
        }
        if self.duration * s.frequency < 2.0 {
            return param_err(format!(
                "duration {} s covers fewer than 2 source cycles",
                self.duration
            ));
        }
        Ok(())
    }

    /// Integrates from a zero initial state and samples every
    /// `sample_period`, starting at `t = 0`.
    pub fn run(&self) -> Result<SimOutput> {
        self.validate()?;
        let p = &self.params;
        let circuit = Circuit {
            p,
            curve: &self.curve,
            source: &self.source,
            r_load: match self.load {
                LoadSpec::OpenCircuit => None,
                LoadSpec::Resistive { r_load } => Some(r_load),
            },
            flux_base: p.flux_base(),
            current_base: p.current_base(),
        };

        let tb = self.sample_period;
        let stable = (tb * circuit.stiffness_bound() / RK4_STEP_BUDGET).ceil() as usize;
        let substeps = self.substeps.max(stable);
        debug!(
            "rk4: {} substeps per sample (requested {}, stability needs {})",
            substeps, self.substeps, stable
        );
        let h = tb / substeps as f64;

        let len = self.sample_count();
        let mut v1 = Vec::with_capacity(len);
        let mut i1 = Vec::with_capacity(len);
        let mut v2 = Vec::with_capacity(len);
        let mut i2 = Vec::with_capacity(len);
        let mut flux = Vec::with_capacity(len);
        let mut vx = Vec::with_capacity(len);
        let mut ix = Vec::with_capacity(len);
        let mut im = Vec::with_capacity(len);

        let mut state = State::default();
        for n in 0..len {
            let t = n as f64 * tb;
            let shunt_v = circuit.shunt_voltage(&state);
            v1.push(self.source.voltage(t));
            i1.push(state.i1);
            i2.push(state.i2);
            v2.push(match circuit.r_load {
                Some(rl) => rl * state.i2,
                None => shunt_v,
            });
            flux.push(state.flux);
            vx.push(shunt_v);
            ix.push(p.turns_ratio * state.i1 - state.i2);
            im.push(circuit.magnetizing_current(state.flux));

            if n + 1 < len {
                for s in 0..substeps {
                    let ts = (n as f64 + s as f64 / substeps as f64) * tb;
                    state = circuit.rk4_step(ts, h, state);
                }
                if !state.is_finite() {
                    return Err(Error::Divergence {
                        time: (n + 1) as f64 * tb,
                    });
                }
            }
        }

        let sig = |v: Vec<f64>| SampledSignal::new(v, tb);
        Ok(SimOutput {
            record: TerminalRecord::new(sig(v1)?, sig(i1)?, sig(v2)?, sig(i2)?)?,
            traces: CoreTraces {
                flux: sig(flux)?,
                vx: sig(vx)?,
                ix: sig(ix)?,
                im: sig(im)?,
            },
            substeps,
        })
    }
}

/// Simulates the circuit with the default substep count and returns the
/// terminal waveforms only.
pub fn simulate(
    params: &TransformerParams,
    curve: &SaturationCurve,
    load: LoadSpec,
    source: SourceSpec,
    duration: f64,
    sample_period: f64,
) -> Result<TerminalRecord> {
    Simulation::new(
        params.clone(),
        curve.clone(),
        load,
        source,
        duration,
        sample_period,
    )
    .run()
    .map(|out| out.record)
}
