//! Report data model and file emission.
//!
//! `report.json` is canonical: keys sorted (the default map representation),
//! every float rounded to 9 significant digits, newline-terminated. The same
//! report therefore always serialises to the same bytes, which makes replay
//! determinism testable at the byte level. CSVs and plot-data files use the
//! same float formatting.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use crate::optimizer::GenerationRecord;
use crate::scoring::WeightVector;

/// Mean and standard deviation over the samples of one (config, R) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

/// Metrics of one sampled run subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub config: String,
    pub r: usize,
    pub sample: usize,
    /// acc@1 through acc@5.
    pub acc: [usize; 5],
    pub wasted_effort_total: usize,
    pub confidence_mean: f64,
    pub tokens_total: u64,
    pub wall_time_ms: u64,
    pub energy_j: Option<f64>,
}

/// Sample statistics of one (config, R) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub config: String,
    pub r: usize,
    /// Stats for acc@1 through acc@5.
    pub acc: Vec<Stat>,
    pub wasted_effort_total: Stat,
    pub confidence_mean: Stat,
    pub tokens_total: Stat,
    pub wall_time_ms: Stat,
    pub energy_j: Option<Stat>,
}

/// DE optimisation trace of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTrace {
    pub fold: usize,
    pub records: Vec<GenerationRecord>,
}

/// Externally reported baseline numbers (from prior work) that the report
/// can carry alongside computed rows. Ingestion only; never computed here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalBaseline {
    pub label: String,
    /// acc@1 through acc@5 as reported.
    pub acc: Vec<usize>,
}

/// The complete evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<SampleRow>,
    pub aggregates: Vec<AggregateRow>,
    /// Venn region label -> bug count, from the pool prefix at `overlap_r`.
    pub overlap: BTreeMap<String, usize>,
    pub overlap_r: usize,
    /// Weights used for the DE ensemble configuration, when present.
    pub weights_used: Option<WeightVector>,
    pub fold_traces: Vec<FoldTrace>,
    pub de_trace_files: Vec<String>,
    #[serde(default)]
    pub external_baselines: Vec<ExternalBaseline>,
    /// Pairs of energy-attributed runs whose wall-clock windows overlap;
    /// non-zero means whole-machine energy was double-attributed.
    pub overlapping_energy_windows: usize,
}

/// Round to 9 significant digits; the canonical float treatment everywhere.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Canonical string form of a float (9 significant digits, shortest display).
pub fn float_str(x: f64) -> String {
    format!("{}", round_sig9(x))
}

fn round_json_floats(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if !n.is_i64() && !n.is_u64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig9(f)) {
                        *n = rounded;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json_floats),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json_floats),
        _ => {}
    }
}

/// Canonical JSON bytes: sorted keys, rounded floats, trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut json = serde_json::to_value(value).expect("report serialization");
    round_json_floats(&mut json);
    serde_json::to_string_pretty(&json).expect("canonical serialization") + "\n"
}

impl Report {
    /// Parse a report and verify its aggregate rows are recomputable from the
    /// sample rows.
    pub fn from_json(text: &str) -> Result<Report, HarnessError> {
        let report: Report =
            serde_json::from_str(text).map_err(|e| HarnessError::Storage {
                path: "report.json".to_string(),
                message: e.to_string(),
            })?;
        let recomputed = crate::harness::evaluate::aggregate_rows(&report.rows);
        if recomputed.len() != report.aggregates.len() {
            return Err(HarnessError::Storage {
                path: "report.json".to_string(),
                message: format!(
                    "aggregate rows do not match sample rows: {} stored, {} recomputed",
                    report.aggregates.len(),
                    recomputed.len()
                ),
            });
        }
        for (stored, fresh) in report.aggregates.iter().zip(&recomputed) {
            if !aggregates_close(stored, fresh) {
                return Err(HarnessError::Storage {
                    path: "report.json".to_string(),
                    message: format!(
                        "aggregate row ({}, R={}) is not recomputable from the sample rows",
                        stored.config, stored.r
                    ),
                });
            }
        }
        Ok(report)
    }
}

fn stat_close(a: Stat, b: Stat) -> bool {
    (a.mean - b.mean).abs() < 1e-9 && (a.std - b.std).abs() < 1e-9
}

fn aggregates_close(a: &AggregateRow, b: &AggregateRow) -> bool {
    a.config == b.config
        && a.r == b.r
        && a.acc.len() == b.acc.len()
        && a.acc.iter().zip(&b.acc).all(|(x, y)| stat_close(*x, *y))
        && stat_close(a.wasted_effort_total, b.wasted_effort_total)
        && stat_close(a.confidence_mean, b.confidence_mean)
        && stat_close(a.tokens_total, b.tokens_total)
        && stat_close(a.wall_time_ms, b.wall_time_ms)
        && match (a.energy_j, b.energy_j) {
            (Some(x), Some(y)) => stat_close(x, y),
            (None, None) => true,
            _ => false,
        }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn rows_csv(rows: &[SampleRow]) -> String {
    let mut out = String::from(
        "config,r,sample,acc1,acc2,acc3,acc4,acc5,wasted_effort_total,confidence_mean,tokens_total,wall_time_ms,energy_j\n",
    );
    for row in rows {
        let energy = row.energy_j.map(float_str).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.config,
            row.r,
            row.sample,
            row.acc[0],
            row.acc[1],
            row.acc[2],
            row.acc[3],
            row.acc[4],
            row.wasted_effort_total,
            float_str(row.confidence_mean),
            row.tokens_total,
            row.wall_time_ms,
            energy,
        ));
    }
    out
}

fn aggregates_csv(aggregates: &[AggregateRow]) -> String {
    let mut out = String::from("config,r,metric,mean,std\n");
    for row in aggregates {
        let mut push = |metric: &str, stat: Stat| {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.config,
                row.r,
                metric,
                float_str(stat.mean),
                float_str(stat.std)
            ));
        };
        for (i, stat) in row.acc.iter().enumerate() {
            push(&format!("acc{}", i + 1), *stat);
        }
        push("wasted_effort_total", row.wasted_effort_total);
        push("confidence_mean", row.confidence_mean);
        push("tokens_total", row.tokens_total);
        push("wall_time_ms", row.wall_time_ms);
        if let Some(energy) = row.energy_j {
            push("energy_j", energy);
        }
    }
    out
}

fn overlap_csv(overlap: &BTreeMap<String, usize>) -> String {
    let mut out = String::from("region,count\n");
    for (region, count) in overlap {
        out.push_str(&format!("{region},{count}\n"));
    }
    out
}

/// Accuracy-vs-cost scatter series: one row per (config, R, sample).
fn scatter_csv(rows: &[SampleRow]) -> String {
    let mut out = String::from("config,r,sample,acc1,tokens_total,wall_time_ms,energy_j\n");
    for row in rows {
        let energy = row.energy_j.map(float_str).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.config, row.r, row.sample, row.acc[0], row.tokens_total, row.wall_time_ms, energy,
        ));
    }
    out
}

/// acc@k bar data: one row per (config, R, k).
fn acc_at_k_csv(aggregates: &[AggregateRow]) -> String {
    let mut out = String::from("config,r,k,mean,std\n");
    for row in aggregates {
        for (i, stat) in row.acc.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.config,
                row.r,
                i + 1,
                float_str(stat.mean),
                float_str(stat.std)
            ));
        }
    }
    out
}

fn trace_jsonl(trace: &FoldTrace) -> String {
    let mut out = String::new();
    for record in &trace.records {
        out.push_str(&serde_json::to_string(record).expect("trace serialization"));
        out.push('\n');
    }
    out
}

/// Write every report artifact into `out_dir`. Emission is a pure function
/// of the report: identical reports produce byte-identical files.
pub fn report_emit(report: &Report, out_dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    write_file(&out_dir.join("report.json"), &canonical_json(report))?;
    write_file(&out_dir.join("rows.csv"), &rows_csv(&report.rows))?;
    write_file(
        &out_dir.join("aggregates.csv"),
        &aggregates_csv(&report.aggregates),
    )?;
    write_file(&out_dir.join("overlap.csv"), &overlap_csv(&report.overlap))?;
    write_file(&out_dir.join("plot_scatter.csv"), &scatter_csv(&report.rows))?;
    write_file(
        &out_dir.join("plot_acc_at_k.csv"),
        &acc_at_k_csv(&report.aggregates),
    )?;
    for (trace, file) in report.fold_traces.iter().zip(&report.de_trace_files) {
        write_file(&out_dir.join(file), &trace_jsonl(trace))?;
    }
    Ok(())
}
