mod config;
mod pipeline;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qubit_riccati::oracle::{run_oracle, OracleConfig};
use qubit_riccati::Error;
use serde::Serialize;

use config::RunConfig;

/// Stationary qubit states from Riccati solutions of a block Hamiltonian.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, solve, derive states and verify one configuration.
    Run {
        #[command(flatten)]
        common: Common,
        /// Report path (overrides `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every value of the config's sweep block.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Directory for the per-point reports.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Combined CSV path (default: `<out>/sweep.csv`).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Concurrent sweep points (overrides `workers` in the config).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Cross-check both solvers on random small instances.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Full summary path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Tolerance override, KEY=VAL; repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Sample times, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply_tol_overrides(&self.tol)?;
        if let Some(times) = &self.times {
            cfg.times = times.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Unusable configuration or parameters.
    Invalid(String),
    /// A solver or decomposition failed.
    Solver(String),
}

impl CliError {
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::NotHermitian { .. }
            | Error::DimensionMismatch(_)
            | Error::InvalidParameter(_)
            | Error::DegenerateSpectrum { .. }
            | Error::WrongModel(_)
            | Error::OddDimension(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn report_failures(report: &pipeline::RunReport) {
    for c in report.verification.failures() {
        eprintln!("  FAIL {}: {:.3e} > {:.3e}", c.name, c.defect, c.threshold);
    }
}

fn cmd_run(common: &Common, out: Option<PathBuf>) -> Result<u8, CliError> {
    let cfg = common.load()?;
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("report.json"));
    let report = pipeline::run(&cfg)?;
    write_json(&report, &out)?;
    let status = if report.pass() { "pass" } else { "FAIL" };
    println!(
        "{status}: {} solution(s), {} state(s) -> {}",
        report.solutions.len(),
        report.states.len(),
        out.display()
    );
    if report.pass() {
        Ok(0)
    } else {
        report_failures(&report);
        Ok(1)
    }
}

fn cmd_sweep(common: &Common, out: Option<PathBuf>, csv: Option<PathBuf>, workers: Option<usize>) -> Result<u8, CliError> {
    let cfg = common.load()?;
    if workers == Some(0) {
        return Err(CliError::Invalid("workers must be at least 1".into()));
    }
    let dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("sweep"));
    let outcome = sweep::run_sweep(&cfg, workers.or(cfg.workers))?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", dir.display())))?;

    let mut code = 0u8;
    for (k, (value, result)) in outcome.reports.iter().enumerate() {
        match result {
            Ok(report) => {
                write_json(report, &dir.join(format!("point_{k:03}.json")))?;
                if !report.pass() {
                    eprintln!("sweep value {value}: verification failed");
                    report_failures(report);
                    code = code.max(1);
                }
            }
            Err(e) => {
                eprintln!("sweep value {value}: {e}");
                code = code.max(e.exit_code());
            }
        }
    }
    let csv = csv.unwrap_or_else(|| dir.join("sweep.csv"));
    let rows = outcome.rows();
    sweep::write_csv(&rows, &csv)?;
    println!("{} point(s), {} row(s) -> {}", outcome.reports.len(), rows.len(), csv.display());
    Ok(code)
}

fn cmd_oracle(n: usize, trials: usize, seed: u64, out: Option<PathBuf>) -> Result<u8, CliError> {
    if !(1..=qubit_riccati::riccati::EXHAUSTIVE_MAX_N.min(4)).contains(&n) {
        return Err(CliError::Invalid(format!("oracle dimension must be between 1 and 4, got {n}")));
    }
    let summary = run_oracle(&OracleConfig::new(n, trials, seed));
    if let Some(path) = out {
        write_json(&summary, &path)?;
    }
    let failed: Vec<_> = summary.failed().collect();
    println!("{} of {} trial(s) passed", trials - failed.len(), trials);
    for t in &failed {
        eprintln!("trial {} failed: {}", t.trial, t.failure.as_deref().unwrap_or("unknown"));
        eprintln!("{}", serde_json::to_string(t).expect("records serialize"));
    }
    Ok(if summary.pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, out } => cmd_run(&common, out),
        Command::Sweep { common, out, csv, workers } => cmd_sweep(&common, out, csv, workers),
        Command::Oracle { n, trials, seed, out } => cmd_oracle(n, trials, seed, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
