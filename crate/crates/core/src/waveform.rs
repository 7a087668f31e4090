//! CSV files: terminal waveforms (`t,v1,i1,v2,i2`) and identified curves
//! (`x_pu,lambda_pu,visits`).
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! written file reads back bit-for-bit. Files are written to a temporary
//! sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::estimator::SaturationEstimate;
use crate::signals::SampledSignal;
use crate::sim::TerminalRecord;

pub const WAVEFORM_HEADER: [&str; 5] = ["t", "v1", "i1", "v2", "i2"];

/// Largest tolerated deviation of a sampling interval from the median one.
pub const MAX_INTERVAL_DEVIATION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum WaveformError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: no data rows")]
    Empty { path: String },

    #[error("{path}: need at least two data rows to infer the sample period")]
    TooFewRows { path: String },

    #[error("{path}: expected header `t,v1,i1,v2,i2`, found `{found}`")]
    Header { path: String, found: String },

    #[error("{path}, line {line}: {reason}")]
    Malformed {
        path: String,
        line: u64,
        reason: String,
    },

    #[error(
        "{path}, line {line}: non-uniform sampling, interval {interval} s deviates more than 1% from the median {median} s"
    )]
    NonUniform {
        path: String,
        line: u64,
        interval: f64,
        median: f64,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WaveformError + '_ {
    move |source| WaveformError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), WaveformError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Renders a record as CSV text with `t = n * T_b`.
pub fn format_waveform(record: &TerminalRecord) -> String {
    let tb = record.sample_period();
    let mut out = String::with_capacity(record.len() * 96);
    out.push_str(&WAVEFORM_HEADER.join(","));
    out.push('\n');
    let (v1, i1, v2, i2) = (
        record.v1().samples(),
        record.i1().samples(),
        record.v2().samples(),
        record.i2().samples(),
    );
    for n in 0..record.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            n as f64 * tb,
            v1[n],
            i1[n],
            v2[n],
            i2[n]
        ));
    }
    out
}

pub fn write_waveform(path: &Path, record: &TerminalRecord) -> Result<(), WaveformError> {
    write_atomic(path, format_waveform(record).as_bytes())
}

/// Parses a waveform CSV. The sample period is the mean interval once every
/// interval has been checked against the median.
pub fn parse_waveform(text: &str, path: &str) -> Result<TerminalRecord, WaveformError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| WaveformError::Malformed {
        path: path.to_string(),
        line: 1,
        reason: e.to_string(),
    })?;
    if header.iter().ne(WAVEFORM_HEADER.iter().copied()) {
        if header.is_empty() || header.iter().all(str::is_empty) {
            return Err(WaveformError::Empty { path: path.into() });
        }
        return Err(WaveformError::Header {
            path: path.into(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut cols: [Vec<f64>; 5] = Default::default();
    let mut lines = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| WaveformError::Malformed {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line()),
            reason: match e.kind() {
                csv::ErrorKind::UnequalLengths {
                    expected_len, len, ..
                } => format!("expected {expected_len} fields, found {len}"),
                _ => e.to_string(),
            },
        })?;
        let line = row.position().map_or(0, |p| p.line());
        for (k, field) in row.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| WaveformError::Malformed {
                path: path.into(),
                line,
                reason: format!("column `{}`: cannot parse `{field}`", WAVEFORM_HEADER[k]),
            })?;
            if !v.is_finite() {
                return Err(WaveformError::Malformed {
                    path: path.into(),
                    line,
                    reason: format!("column `{}`: value is not finite", WAVEFORM_HEADER[k]),
                });
            }
            cols[k].push(v);
        }
        lines.push(line);
    }

    let n = cols[0].len();
    if n == 0 {
        return Err(WaveformError::Empty { path: path.into() });
    }
    if n < 2 {
        return Err(WaveformError::TooFewRows { path: path.into() });
    }
    let t = &cols[0];
    let intervals: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = intervals.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if median.is_nan() || median <= 0.0 {
        return Err(WaveformError::Malformed {
            path: path.into(),
            line: lines[1],
            reason: format!("timestamps must increase (median interval {median})"),
        });
    }
    for (k, &dt) in intervals.iter().enumerate() {
        if ((dt - median) / median).abs() > MAX_INTERVAL_DEVIATION {
            return Err(WaveformError::NonUniform {
                path: path.into(),
                line: lines[k + 1],
                interval: dt,
                median,
            });
        }
    }
    let tb = (t[n - 1] - t[0]) / (n - 1) as f64;

    let [_, v1, i1, v2, i2] = cols;
    let sig = |v: Vec<f64>| {
        SampledSignal::new(v, tb).map_err(|e| WaveformError::Malformed {
            path: path.into(),
            line: 0,
            reason: e.to_string(),
        })
    };
    TerminalRecord::new(sig(v1)?, sig(i1)?, sig(v2)?, sig(i2)?).map_err(|e| {
        WaveformError::Malformed {
            path: path.into(),
            line: 0,
            reason: e.to_string(),
        }
    })
}

pub fn read_waveform(path: &Path) -> Result<TerminalRecord, WaveformError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_waveform(&text, &path.display().to_string())
}

/// Renders the identified curve, one row per touched bin, sorted by `x_pu`.
pub fn format_curve(estimate: &SaturationEstimate) -> String {
    let mut out = String::from("x_pu,lambda_pu,visits\n");
    for (_, bin) in estimate.iter() {
        out.push_str(&format!("{},{},{}\n", bin.x, bin.lambda_pu, bin.visits));
    }
    out
}

pub fn write_curve(path: &Path, estimate: &SaturationEstimate) -> Result<(), WaveformError> {
    write_atomic(path, format_curve(estimate).as_bytes())
}
