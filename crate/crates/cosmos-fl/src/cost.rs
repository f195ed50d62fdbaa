//! Inference cost accounting: token counts, wall time, and GPU energy.
//!
//! Power sampling is decoupled from the core: an external collector polls a
//! system utility and writes a CSV of `(timestamp_ms, power_w)` samples; this
//! module only ingests the CSV and integrates power over run windows with the
//! trapezoidal rule. Runs whose window contains no samples get a null energy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::RunRecord;

/// Errors from cost ingestion and integration.
#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("power samples are not strictly increasing in time at index {index} (t={timestamp_ms} ms)")]
    NonMonotoneSamples { index: usize, timestamp_ms: u64 },
    #[error("degenerate window: start {start_ms} ms must be before end {end_ms} ms")]
    DegenerateWindow { start_ms: u64, end_ms: u64 },
    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One reading from the power collector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    /// Milliseconds since session start.
    pub timestamp_ms: u64,
    /// Instantaneous power draw in watts.
    pub power_w: f64,
}

/// Per-run cost summary.
///
/// `tokens_total` always equals `tokens_in + tokens_out`; the constructor
/// enforces it. `energy_j` is null exactly when no power samples overlapped
/// the run window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub tokens_total: u64,
    pub wall_time_ms: u64,
    pub energy_j: Option<f64>,
    pub power_mean_w: Option<f64>,
}

impl CostRecord {
    pub fn new(tokens_in: u64, tokens_out: u64, wall_time_ms: u64) -> Self {
        CostRecord {
            tokens_in,
            tokens_out,
            tokens_total: tokens_in + tokens_out,
            wall_time_ms,
            energy_j: None,
            power_mean_w: None,
        }
    }
}

fn check_monotone(samples: &[PowerSample]) -> Result<(), CostError> {
    for (index, pair) in samples.windows(2).enumerate() {
        if pair[1].timestamp_ms <= pair[0].timestamp_ms {
            return Err(CostError::NonMonotoneSamples {
                index: index + 1,
                timestamp_ms: pair[1].timestamp_ms,
            });
        }
    }
    Ok(())
}

/// Trapezoidal integration of power over the samples lying inside the window.
///
/// Only samples with `start_ms <= t <= end_ms` participate; consecutive
/// in-window samples form trapezoids. Returns `None` when the window contains
/// no samples (energy is unknown, not zero); a single in-window sample spans
/// no interval and integrates to 0 J.
pub fn integrate_energy(
    samples: &[PowerSample],
    window: (u64, u64),
) -> Result<Option<f64>, CostError> {
    let (start_ms, end_ms) = window;
    if start_ms >= end_ms {
        return Err(CostError::DegenerateWindow { start_ms, end_ms });
    }
    check_monotone(samples)?;

    let in_window: Vec<&PowerSample> = samples
        .iter()
        .filter(|s| s.timestamp_ms >= start_ms && s.timestamp_ms <= end_ms)
        .collect();
    if in_window.is_empty() {
        return Ok(None);
    }

    let mut joules = 0.0;
    for pair in in_window.windows(2) {
        let dt_s = (pair[1].timestamp_ms - pair[0].timestamp_ms) as f64 / 1000.0;
        joules += 0.5 * (pair[0].power_w + pair[1].power_w) * dt_s;
    }
    Ok(Some(joules))
}

/// Fill in a run's energy fields from the session's power samples.
///
/// The run window is `[started_ms, started_ms + wall_time_ms]`. When energy is
/// present, `power_mean_w` is energy divided by the window length in seconds.
pub fn attach_costs(mut run: RunRecord, samples: &[PowerSample]) -> Result<RunRecord, CostError> {
    let start = run.started_ms;
    let end = run.started_ms + run.wall_time_ms;
    let energy = integrate_energy(samples, (start, end))?;
    run.energy_j = energy;
    run.power_mean_w = energy.map(|j| j / ((end - start) as f64 / 1000.0));
    Ok(run)
}

/// Parse a collector CSV with header `timestamp_ms,power_w`.
///
/// Rejects negative power and non-increasing timestamps, reporting the
/// offending line.
pub fn ingest_power_csv(path: &Path) -> Result<Vec<PowerSample>, CostError> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| CostError::Io {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    {
        let headers = reader.headers().map_err(|e| CostError::Csv {
            path: display.clone(),
            line: 1,
            message: e.to_string(),
        })?;
        let expected = ["timestamp_ms", "power_w"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(CostError::Csv {
                path: display,
                line: 1,
                message: format!("expected header \"timestamp_ms,power_w\", found \"{}\"", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
    }

    let mut samples = Vec::new();
    for result in reader.into_records() {
        let record = result.map_err(|e| CostError::Csv {
            path: display.clone(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_field = |idx: usize, name: &str| -> Result<&str, CostError> {
            record.get(idx).ok_or_else(|| CostError::Csv {
                path: display.clone(),
                line,
                message: format!("missing {name} column"),
            })
        };
        let timestamp_ms: u64 =
            parse_field(0, "timestamp_ms")?
                .trim()
                .parse()
                .map_err(|e| CostError::Csv {
                    path: display.clone(),
                    line,
                    message: format!("bad timestamp_ms: {e}"),
                })?;
        let power_w: f64 = parse_field(1, "power_w")?
            .trim()
            .parse()
            .map_err(|e| CostError::Csv {
                path: display.clone(),
                line,
                message: format!("bad power_w: {e}"),
            })?;
        if !power_w.is_finite() || power_w < 0.0 {
            return Err(CostError::Csv {
                path: display.clone(),
                line,
                message: format!("power must be a non-negative number, got {power_w}"),
            });
        }
        if let Some(last) = samples.last() {
            let last: &PowerSample = last;
            if timestamp_ms <= last.timestamp_ms {
                return Err(CostError::Csv {
                    path: display.clone(),
                    line,
                    message: format!(
                        "timestamps must be strictly increasing ({timestamp_ms} after {})",
                        last.timestamp_ms
                    ),
                });
            }
        }
        samples.push(PowerSample {
            timestamp_ms,
            power_w,
        });
    }
    Ok(samples)
}
