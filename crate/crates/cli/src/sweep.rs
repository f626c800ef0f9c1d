//! Parameter sweeps: one run per value, executed concurrently and emitted in
//! sweep order, plus a combined plot-ready CSV.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::pipeline::{run, RunReport};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub sweep_value: f64,
    pub state_index: usize,
    pub eigenvalue: f64,
    pub r_real: Option<f64>,
    pub verification_defect: f64,
    pub branch: &'static str,
}

pub struct SweepOutcome {
    pub reports: Vec<(f64, Result<RunReport, CliError>)>,
}

impl SweepOutcome {
    /// Rows of every successful point, sorted by (value, eigenvalue, index).
    pub fn rows(&self) -> Vec<CsvRow> {
        let mut rows: Vec<CsvRow> = self
            .reports
            .iter()
            .filter_map(|(v, r)| r.as_ref().ok().map(|r| (*v, r)))
            .flat_map(|(value, report)| {
                report.states.iter().map(move |s| CsvRow {
                    sweep_value: value,
                    state_index: s.index,
                    eigenvalue: s.eigenvalue,
                    r_real: s.r.map(|r| r[0]),
                    verification_defect: s.verification.stationarity_defect,
                    branch: match s.kind {
                        qubit_riccati::Branch::Graph => "graph",
                        qubit_riccati::Branch::Complement => "complement",
                    },
                })
            })
            .collect();
        rows.sort_by(|a, b| {
            a.sweep_value
                .total_cmp(&b.sweep_value)
                .then(a.eigenvalue.total_cmp(&b.eigenvalue))
                .then(a.state_index.cmp(&b.state_index))
        });
        rows
    }
}

pub fn run_sweep(cfg: &RunConfig, workers: Option<usize>) -> Result<SweepOutcome, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Invalid("config has no sweep block".into()))?;
    if sweep.values.is_empty() {
        return Err(CliError::Invalid("sweep has no values".into()));
    }
    let points: Vec<RunConfig> = sweep.values.iter().map(|&v| cfg.at_sweep_point(v)).collect();
    for p in &points {
        p.validate()?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::Invalid(format!("cannot start workers: {e}")))?;
    let results: Vec<Result<RunReport, CliError>> = pool.install(|| points.par_iter().map(run).collect());
    Ok(SweepOutcome { reports: sweep.values.iter().copied().zip(results).collect() })
}

pub fn write_csv(rows: &[CsvRow], path: &Path) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Invalid(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
}
