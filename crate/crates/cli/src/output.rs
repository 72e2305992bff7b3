//! CSV and JSON artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use relaxkit::RunTrace;

use crate::CliError;

/// All runs of one scheme together with an optional bound curve per traced norm.
#[derive(Debug, Clone)]
pub struct SchemeTraces {
    pub scheme: String,
    pub labels: Vec<String>,
    pub runs: Vec<RunTrace>,
    /// `bounds[t][s]`: bound on norm `t` after `s` sweeps.
    pub bounds: Vec<Option<Vec<f64>>>,
}

impl SchemeTraces {
    pub fn new(scheme: impl Into<String>, runs: Vec<RunTrace>) -> Self {
        let labels = runs.first().map(|r| r.labels.clone()).unwrap_or_default();
        let bounds = vec![None; labels.len()];
        Self { scheme: scheme.into(), labels, runs, bounds }
    }

    pub fn with_bound(mut self, label: &str, curve: Vec<f64>) -> Self {
        if let Some(t) = self.labels.iter().position(|l| l == label) {
            self.bounds[t] = Some(curve);
        }
        self
    }

    fn sweeps(&self) -> usize {
        self.runs.iter().map(|r| r.records.len()).max().unwrap_or(0)
    }

    /// Value of norm `t` after sweep `s`; runs that stopped early keep their last value.
    fn value(run: &RunTrace, s: usize, t: usize) -> f64 {
        run.records[s.min(run.records.len() - 1)][t]
    }
}

#[derive(Debug, Serialize)]
struct TraceRow<'a> {
    sweep: usize,
    scheme: &'a str,
    norm_kind: &'a str,
    mean: f64,
    min: f64,
    max: f64,
    bound: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RunRow<'a> {
    scheme: &'a str,
    run: usize,
    seed: u64,
    sweep: usize,
    norm_kind: &'a str,
    value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultigridRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub scheme: String,
    pub s: f64,
    pub cycles: usize,
    pub final_relative_residual: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    // Headers are written explicitly so that empty tables still get one.
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

const TRACE_HEADER: [&str; 7] = ["sweep", "scheme", "norm_kind", "mean", "min", "max", "bound"];

/// One row per (scheme, norm, sweep) with the mean, minimum and maximum over runs
/// and the bound (blank where none applies).
pub fn emit_csv(traces: &[SchemeTraces], path: &Path) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER).map_err(|e| csv_err(path, e))?;
    for st in traces.iter().filter(|st| !st.runs.is_empty()) {
        for (t, label) in st.labels.iter().enumerate() {
            for s in 0..st.sweeps() {
                let values = st.runs.iter().map(|r| SchemeTraces::value(r, s, t));
                let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
                for v in values {
                    min = min.min(v);
                    max = max.max(v);
                    sum += v;
                }
                let mean = (sum / st.runs.len() as f64).clamp(min, max);
                let bound = st.bounds[t].as_ref().and_then(|b| b.get(s).copied());
                w.serialize(TraceRow { sweep: s, scheme: &st.scheme, norm_kind: label, mean, min, max, bound })
                    .map_err(|e| csv_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Every individual run, long format.
pub fn emit_runs_csv(traces: &[SchemeTraces], path: &Path) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["scheme", "run", "seed", "sweep", "norm_kind", "value"])
        .map_err(|e| csv_err(path, e))?;
    for st in traces {
        for (i, run) in st.runs.iter().enumerate() {
            for (s, rec) in run.records.iter().enumerate() {
                for (t, label) in st.labels.iter().enumerate() {
                    w.serialize(RunRow { scheme: &st.scheme, run: i, seed: run.seed, sweep: s, norm_kind: label, value: rec[t] })
                        .map_err(|e| csv_err(path, e))?;
                }
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn emit_multigrid_csv(rows: &[MultigridRow], path: &Path) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["N", "scheme", "s", "cycles", "final_relative_residual"])
        .map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}
