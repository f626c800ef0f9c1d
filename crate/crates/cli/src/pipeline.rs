//! One configuration through build → solve → states → verify.

use std::time::Instant;

use qubit_riccati::numerics::frobenius;
use qubit_riccati::oracle::{random_hermitian, trial_rng};
use qubit_riccati::riccati::{
    analytic_solutions, default_analytic_model, solve_invariant_subspace, solve_newton, AnalyticModel,
};
use qubit_riccati::stationary::{all_stationary_states, expectation};
use qubit_riccati::verify::{certify, check_nonstationary_control, control_superposition, Check};
use qubit_riccati::wire::{encode_matrix, WireMatrix};
use qubit_riccati::{BlockHamiltonian, Branch, Method, ModelKind, RiccatiSolution, VerificationReport};
use serde::Serialize;

use crate::config::{Built, ModelName, RunConfig, Settings, SolverChoice};
use crate::CliError;

const NEWTON_MAX_ITER: usize = 100;
/// Seeded restarts tried when Newton from `X = 0` does not converge.
const NEWTON_RESTARTS: u64 = 4;

#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub method: Method,
    pub x: WireMatrix,
    pub residual_primal: f64,
    pub residual_dual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<usize>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateVerification {
    pub pass: bool,
    /// Largest deviation of the propagated reduced state over the sampled times.
    pub stationarity_defect: f64,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub index: usize,
    pub solution: usize,
    pub kind: Branch,
    pub eigenvalue: f64,
    pub rho: WireMatrix,
    /// Parity expectation of the environment vector (spin-boson only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<[f64; 2]>,
    pub degenerate: bool,
    pub verification: StateVerification,
}

/// Outcome of the non-stationary negative control (informational).
#[derive(Debug, Clone, Serialize)]
pub struct ControlReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub build_s: f64,
    pub solve_s: f64,
    pub states_s: f64,
    pub verify_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub solutions: Vec<SolutionReport>,
    pub states: Vec<StateReport>,
    pub verification: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlReport>,
    /// Solver routes that failed when others succeeded (`solver = all`).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solver_errors: Vec<String>,
    pub timing: Timing,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.verification.overall_pass
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let mut timing = Timing::default();
    let settings = cfg.settings();

    let t = Instant::now();
    let Built { h, ops } = cfg.build()?;
    timing.build_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (solutions, solver_errors) = solve(cfg, &h, &settings)?;
    timing.solve_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let all_states = solutions
        .iter()
        .map(|s| all_stationary_states(&h, s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from_core)?;
    timing.states_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut verification = VerificationReport::new(&cfg.times);
    let mut states = Vec::new();
    for (i, (sol, sol_states)) in solutions.iter().zip(&all_states).enumerate() {
        let mut report =
            certify(&h, sol, sol_states, &cfg.times, &settings.thresholds).map_err(CliError::from_core)?;
        for (k, state) in sol_states.iter().enumerate() {
            let prefix = format!("state[{k}].");
            let checks: Vec<Check> = report.checks.iter().filter(|c| c.name.starts_with(&prefix)).cloned().collect();
            let stationarity_defect =
                checks.iter().find(|c| c.name.ends_with(".stationarity")).map_or(f64::NAN, |c| c.defect);
            let r = ops.as_ref().map(|ops| {
                let v = &state.source.env_vector;
                let z = expectation(&ops.parity, v) / v.norm_squared();
                [z.re, z.im]
            });
            states.push(StateReport {
                index: states.len(),
                solution: i,
                kind: state.kind(),
                eigenvalue: state.eigenvalue.unwrap_or(f64::NAN),
                rho: encode_matrix(&state.rho),
                r,
                degenerate: state.degenerate,
                verification: StateVerification { pass: checks.iter().all(|c| c.pass), stationarity_defect, checks },
            });
        }
        for c in &mut report.checks {
            c.name = format!("solution[{i}].{}", c.name);
        }
        verification.merge(report);
    }
    let control = solutions.first().map(|s| control_report(&h, s, &cfg.times));
    timing.verify_s = t.elapsed().as_secs_f64();

    Ok(RunReport {
        config: cfg.clone(),
        solutions: solutions.iter().map(solution_report).collect(),
        states,
        verification,
        control,
        solver_errors,
        timing,
    })
}

fn solution_report(s: &RiccatiSolution) -> SolutionReport {
    SolutionReport {
        method: s.method,
        x: encode_matrix(&s.x),
        residual_primal: s.residual_primal,
        residual_dual: s.residual_dual,
        selection: s.selection.clone(),
        iterations: s.iterations(),
    }
}

fn solve(
    cfg: &RunConfig,
    h: &BlockHamiltonian,
    settings: &Settings,
) -> Result<(Vec<RiccatiSolution>, Vec<String>), CliError> {
    let routes: &[SolverChoice] = match cfg.solver {
        SolverChoice::All => &[SolverChoice::Analytic, SolverChoice::InvariantSubspace, SolverChoice::Newton],
        ref one => std::slice::from_ref(one),
    };
    let mut found: Vec<RiccatiSolution> = Vec::new();
    let mut errors = Vec::new();
    let mut first_error = None;
    for route in routes {
        let result = match route {
            SolverChoice::Analytic => analytic(cfg, h),
            SolverChoice::InvariantSubspace => {
                solve_invariant_subspace(h, &cfg.strategy, &settings.solver).map_err(CliError::from_core)
            }
            SolverChoice::Newton => newton(cfg, h, settings).map(|s| vec![s]),
            SolverChoice::All => unreachable!(),
        };
        match result {
            Ok(list) => {
                for s in list {
                    let duplicate = found.iter().any(|f| frobenius(&(&f.x - &s.x)) <= settings.solver.dedup);
                    if !duplicate {
                        found.push(s);
                    }
                }
            }
            Err(e) => {
                errors.push(format!("{route:?}: {e}"));
                first_error.get_or_insert(e);
            }
        }
    }
    match (found.is_empty(), first_error) {
        (true, Some(e)) => Err(e),
        (true, None) => Err(CliError::Solver("no solution found".into())),
        _ => Ok((found, errors)),
    }
}

fn analytic(cfg: &RunConfig, h: &BlockHamiltonian) -> Result<Vec<RiccatiSolution>, CliError> {
    // The parity solution also covers the decoupled spin-boson case, and its
    // states keep the parity-expectation form.
    let model = match (cfg.model, &h.kind) {
        (ModelName::SpinBoson, ModelKind::SpinBoson { beta, .. }) if *beta == 0.0 => Some(AnalyticModel::SpinBoson),
        _ => default_analytic_model(h),
    };
    let model = model.ok_or_else(|| CliError::Invalid("no closed-form solution is known for this model".into()))?;
    analytic_solutions(h, model).map_err(CliError::from_core)
}

fn newton(cfg: &RunConfig, h: &BlockHamiltonian, settings: &Settings) -> Result<RiccatiSolution, CliError> {
    let tol = settings.newton_tol * h.full_norm();
    let mut last = match solve_newton(h, None, NEWTON_MAX_ITER, tol) {
        Ok(s) => return Ok(s),
        Err(e) => e,
    };
    for k in 0..NEWTON_RESTARTS {
        let x0 = random_hermitian(&mut trial_rng(cfg.seed, k), h.n_env);
        match solve_newton(h, Some(&x0), NEWTON_MAX_ITER, tol) {
            Ok(s) => return Ok(s),
            Err(e) => last = e,
        }
    }
    Err(CliError::from_core(last))
}

fn control_report(h: &BlockHamiltonian, sol: &RiccatiSolution, times: &[f64]) -> ControlReport {
    let empty = ControlReport { eigen_defect: None, deviation: None, note: None };
    match control_superposition(h, &sol.x) {
        Ok(Some((psi, _gap))) => match check_nonstationary_control(h, &sol.x, &psi, times) {
            Ok(o) => ControlReport { eigen_defect: Some(o.eigen_defect), deviation: Some(o.deviation), ..empty },
            Err(e) => ControlReport { note: Some(e.to_string()), ..empty },
        },
        Ok(None) => ControlReport { note: Some("no pair of distinct eigenvalues available".into()), ..empty },
        Err(e) => ControlReport { note: Some(e.to_string()), ..empty },
    }
}
