//! Flat `section.key = value` configuration files.
//!
//! ```text
//! # 22 kV / 400 V, 50 kVA
//! transformer.R1 = 48.4
//! transformer.Vb2 = 400
//! curve.knots = 0:0, 0.02:0.8, 0.08:1.1, 1.0:1.4
//! load.kind = open
//! ```
//!
//! Blank lines and `#` comments are ignored. Keys are case-sensitive. The
//! estimator reads `estimate.R1` ... `estimate.Ib2` when present and falls back
//! to the matching `transformer.*` key, so a run config can hand the
//! estimator deliberately different impedances than the simulator used.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::estimator::{CoreLossMode, EstimationConfig};
use crate::report::QualificationRule;
use crate::sim::{
    LoadSpec, SaturationCurve, Simulation, SourceSpec, TransformerParams, DEFAULT_SUBSTEPS,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("config line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("config line {line}: key `{key}` is set twice")]
    Duplicate { line: usize, key: String },

    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("missing config key `{0}`")]
    Missing(String),

    #[error("config key `{key}` (line {line}): {reason}")]
    Invalid {
        key: String,
        line: usize,
        reason: String,
    },
}

const TRANSFORMER_KEYS: [&str; 9] = ["R1", "L1", "R2", "L2", "Rc", "a", "Vb2", "Ib2", "omega"];
const ESTIMATOR_OVERRIDES: [&str; 7] = ["R1", "L1", "R2", "L2", "omega", "Vb2", "Ib2"];
const OTHER_KEYS: [&str; 17] = [
    "curve.knots",
    "load.kind",
    "load.R",
    "source.amplitude",
    "source.frequency",
    "source.phase",
    "sim.duration",
    "sim.sample_period",
    "sim.substeps",
    "estimate.gamma",
    "estimate.beta",
    "estimate.bin_width",
    "estimate.settle_cycles",
    "estimate.mode",
    "report.threshold",
    "report.min_visits",
    "report.min_flux",
];

fn is_known_key(key: &str) -> bool {
    if let Some(k) = key.strip_prefix("transformer.") {
        return TRANSFORMER_KEYS.contains(&k);
    }
    if let Some(k) = key.strip_prefix("estimate.") {
        if ESTIMATOR_OVERRIDES.contains(&k) {
            return true;
        }
    }
    OTHER_KEYS.contains(&key)
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed configuration file.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

impl FromStr for Config {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || !key.contains('.') || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            }
            if !is_known_key(key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            let entry = Entry {
                value: value.to_string(),
                line,
            };
            if entries.insert(key.to_string(), entry).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self { entries })
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        text.parse()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            key: key.to_string(),
            line: self.entries.get(key).map_or(0, |e| e.line),
            reason: reason.into(),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.invalid(key, format!("cannot parse `{v}` as a number"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.parse_value(key)?
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.parse_value(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parse_value(key)?.unwrap_or(default))
    }

    /// `estimate.<name>` if present, otherwise `transformer.<name>`.
    fn estimator_f64(&self, name: &str) -> Result<f64, ConfigError> {
        let own = format!("estimate.{name}");
        if self.contains(&own) {
            self.f64(&own)
        } else {
            self.f64(&format!("transformer.{name}"))
        }
    }

    pub fn transformer(&self) -> Result<TransformerParams, ConfigError> {
        let get = |k: &str| self.f64(&format!("transformer.{k}"));
        let p = TransformerParams {
            r1: get("R1")?,
            l1: get("L1")?,
            r2: get("R2")?,
            l2: get("L2")?,
            rc: get("Rc")?,
            turns_ratio: get("a")?,
            vb2: get("Vb2")?,
            ib2: get("Ib2")?,
            omega: get("omega")?,
        };
        for k in TRANSFORMER_KEYS {
            let v = get(k)?;
            if !(v.is_finite() && v > 0.0) {
                let key = format!("transformer.{k}");
                return Err(self.invalid(&key, format!("must be positive, got {v}")));
            }
        }
        Ok(p)
    }

    /// `curve.knots = i0:l0, i1:l1, ...` in per-unit.
    pub fn curve(&self) -> Result<SaturationCurve, ConfigError> {
        let key = "curve.knots";
        let text = self
            .get_str(key)
            .ok_or_else(|| ConfigError::Missing(key.into()))?;
        let knots = text
            .split(',')
            .map(|pair| {
                let (i, l) = pair.split_once(':').ok_or_else(|| {
                    self.invalid(key, format!("knot `{}` is not `i:lambda`", pair.trim()))
                })?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| self.invalid(key, format!("cannot parse `{}`", s.trim())))
                };
                Ok((parse(i)?, parse(l)?))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        SaturationCurve::new(knots).map_err(|e| self.invalid(key, e.to_string()))
    }

    pub fn load_spec(&self) -> Result<LoadSpec, ConfigError> {
        match self.get_str("load.kind") {
            None | Some("open") => Ok(LoadSpec::OpenCircuit),
            Some("resistive") => {
                let r_load = self.f64("load.R")?;
                if !(r_load.is_finite() && r_load > 0.0) {
                    return Err(self.invalid("load.R", format!("must be positive, got {r_load}")));
                }
                Ok(LoadSpec::Resistive { r_load })
            }
            Some(other) => Err(self.invalid(
                "load.kind",
                format!("expected `open` or `resistive`, got `{other}`"),
            )),
        }
    }

    pub fn source(&self, omega: f64) -> Result<SourceSpec, ConfigError> {
        Ok(SourceSpec {
            amplitude: self.f64("source.amplitude")?,
            frequency: self.f64_or("source.frequency", omega / (2.0 * PI))?,
            phase: self.f64_or("source.phase", 0.0)?,
        })
    }

    /// Everything needed by `satcurve simulate`.
    pub fn simulation(&self) -> Result<Simulation, ConfigError> {
        let params = self.transformer()?;
        let source = self.source(params.omega)?;
        let sim = Simulation::new(
            params,
            self.curve()?,
            self.load_spec()?,
            source,
            self.f64("sim.duration")?,
            self.f64("sim.sample_period")?,
        )
        .with_substeps(self.usize_or("sim.substeps", DEFAULT_SUBSTEPS)?);
        Ok(sim)
    }

    /// Everything needed by `satcurve estimate`.
    pub fn estimation(&self) -> Result<EstimationConfig, ConfigError> {
        let mut c = EstimationConfig::new(
            self.estimator_f64("R1")?,
            self.estimator_f64("L1")?,
            self.estimator_f64("R2")?,
            self.estimator_f64("L2")?,
            self.estimator_f64("omega")?,
            self.estimator_f64("Vb2")?,
            self.estimator_f64("Ib2")?,
        );
        c.gamma = self.f64_or("estimate.gamma", c.gamma)?;
        c.beta = self.f64_or("estimate.beta", c.beta)?;
        c.bin_width = self.f64_or("estimate.bin_width", c.bin_width)?;
        c.settle_cycles = self.usize_or("estimate.settle_cycles", c.settle_cycles)?;
        c.core_loss_mode = match self.get_str("estimate.mode") {
            None | Some("exact") => CoreLossMode::Exact,
            Some("approximate") => CoreLossMode::Approximate,
            Some(other) => {
                return Err(self.invalid(
                    "estimate.mode",
                    format!("expected `exact` or `approximate`, got `{other}`"),
                ))
            }
        };
        c.validate()
            .map_err(|e| self.invalid("estimate", e.to_string()))?;
        Ok(c)
    }

    pub fn qualification(&self) -> Result<QualificationRule, ConfigError> {
        let d = QualificationRule::default();
        Ok(QualificationRule {
            min_visits: self.usize_or("report.min_visits", d.min_visits)?,
            min_flux: self.f64_or("report.min_flux", d.min_flux)?,
        })
    }

    /// Acceptance threshold in per-unit flux; `inf` disables the check.
    pub fn threshold(&self) -> Result<f64, ConfigError> {
        let t = self.f64_or("report.threshold", crate::report::DEFAULT_THRESHOLD)?;
        if t.is_nan() || t < 0.0 {
            return Err(self.invalid("report.threshold", format!("must be >= 0, got {t}")));
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "
# reference transformer
transformer.R1 = 48.4
transformer.L1 = 0.616
transformer.R2 = 0.016
transformer.L2 = 2.04e-4
transformer.Rc = 2000
transformer.a = 55
transformer.Vb2 = 400
transformer.Ib2 = 125
transformer.omega = 314.1592653589793

curve.knots = 0:0, 0.02:0.8, 0.08:1.1, 1.0:1.4
load.kind = open
source.amplitude = 35921.0   # peak volts
sim.duration = 0.2
sim.sample_period = 5e-5
";

    #[test]
    fn parses_a_full_simulation_config() {
        let c: Config = FULL.parse().unwrap();
        let sim = c.simulation().unwrap();
        assert_eq!(sim.params.turns_ratio, 55.0);
        assert_eq!(sim.curve.knots().len(), 4);
        assert_eq!(sim.load, LoadSpec::OpenCircuit);
        assert!((sim.source.frequency - 50.0).abs() < 1e-12);
        assert_eq!(sim.source.phase, 0.0);
        assert_eq!(sim.substeps, DEFAULT_SUBSTEPS);

        let est = c.estimation().unwrap();
        assert_eq!(est.r1, 48.4);
        assert_eq!(est.gamma, 1e-4);
        assert_eq!(est.core_loss_mode, CoreLossMode::Exact);
    }

    #[test]
    fn estimator_overrides_take_precedence() {
        let text = format!("{FULL}\nestimate.R2 = 0.16\nestimate.mode = approximate\n");
        let c: Config = text.parse().unwrap();
        let est = c.estimation().unwrap();
        assert_eq!(est.r2, 0.16);
        assert_eq!(est.core_loss_mode, CoreLossMode::Approximate);
        assert_eq!(c.transformer().unwrap().r2, 0.016);
    }

    #[test]
    fn missing_key_is_named() {
        let text = FULL.replace("transformer.Vb2 = 400\n", "");
        let c: Config = text.parse().unwrap();
        let err = c.simulation().unwrap_err().to_string();
        assert!(err.contains("Vb2"), "{err}");
        let err = c.estimation().unwrap_err().to_string();
        assert!(err.contains("Vb2"), "{err}");
    }

    #[test]
    fn syntax_errors_cite_the_line() {
        let err = "transformer.R1 = 1\nnot a setting\n"
            .parse::<Config>()
            .unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
        let err = "transformer.R1 = 1\ntransformer.R1 = 2\n"
            .parse::<Config>()
            .unwrap_err();
        assert!(matches!(err, ConfigError::Duplicate { line: 2, .. }));
        let err = "transformer.Rcc = 1\n".parse::<Config>().unwrap_err();
        assert!(err.to_string().contains("transformer.Rcc"));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let c: Config = FULL
            .replace("transformer.a = 55", "transformer.a = fifty")
            .parse()
            .unwrap();
        assert!(c
            .transformer()
            .unwrap_err()
            .to_string()
            .contains("transformer.a"));

        let c: Config = FULL.replace("0.08:1.1", "0.08:0.7").parse().unwrap();
        assert!(c.curve().unwrap_err().to_string().contains("curve.knots"));

        let c: Config = FULL
            .replace("load.kind = open", "load.kind = resistive")
            .parse()
            .unwrap();
        assert!(c.load_spec().unwrap_err().to_string().contains("load.R"));

        let c: Config = format!("{FULL}estimate.mode = fast\n").parse().unwrap();
        assert!(c.estimation().is_err());
    }

    #[test]
    fn report_settings_default() {
        let c: Config = FULL.parse().unwrap();
        assert_eq!(c.threshold().unwrap(), 0.02);
        let rule = c.qualification().unwrap();
        assert_eq!(rule.min_visits, 10);
        assert_eq!(rule.min_flux, 0.7);
        let c: Config = "report.threshold = inf".parse().unwrap();
        assert_eq!(c.threshold().unwrap(), f64::INFINITY);
    }
}
