//! Identification of the nonlinear flux-linkage / magnetizing-current relation
//! (the saturation curve) of a single-phase transformer core from synchronized
//! terminal recordings of `v1`, `i1`, `v2` and `i2`.
//!
//! The crate is split into:
//!
//! - [`signals`]: discrete-time primitives (leaky integration, first
//!   difference, cycle windowing) shared by everything else.
//! - [`sim`]: a fixed-step RK4 simulator of the series-impedance / ideal
//!   transformer / lossy saturable shunt equivalent circuit. It produces
//!   ground-truth recordings.
//! - [`estimator`]: the identification pipeline. Integral-domain recovery of
//!   the shunt-branch voltage, turns ratio and core-loss estimation, and the
//!   per-cycle binned regression fused by a first-order low-pass recursion.
//! - [`config`], [`waveform`], [`report`], [`cli`]: file formats and the
//!   `satcurve` command-line workflows.
//!
//! ```
//! use satcurve::signals::{leaky_integrate, differentiate, SampledSignal};
//!
//! let f = SampledSignal::new(vec![1.0, 1.0, 1.0], 0.5).unwrap();
//! let integral = leaky_integrate(&f, 0.0).unwrap();
//! assert_eq!(integral.samples(), &[0.5, 1.0, 1.5]);
//! assert_eq!(differentiate(&integral).samples(), f.samples());
//! ```

pub mod cli;
pub mod config;
mod error;
pub mod estimator;
pub mod report;
pub mod signals;
pub mod sim;
pub mod waveform;

pub use error::{Error, Result};
