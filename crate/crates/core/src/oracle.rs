//! Randomised cross-check of the two solver routes on small instances.
//!
//! For each random Hermitian block Hamiltonian the exhaustive
//! invariant-subspace enumeration serves as the reference list of solutions.
//! Newton runs from random starts must land on a member of that list, and
//! every listed solution is certified end to end.
//!
//! Randomness is counter-based: trial `k` of seed `s` draws from a ChaCha20
//! stream keyed by `s` with stream id `k`, so any failing trial can be replayed
//! in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{BlockHamiltonian, ModelKind};
use crate::numerics::{c, frobenius, ComplexMatrix};
use crate::riccati::{
    quadratic_fit, solve_invariant_subspace, solve_newton, QuadraticFit, RiccatiSolution,
    SolverTolerances, Strategy,
};
use crate::stationary::all_stationary_states;
use crate::verify::{certify, Thresholds, VerificationReport};
use crate::wire::{encode_matrix, WireMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub newton_starts: usize,
    pub newton_max_iter: usize,
    /// Newton stops at `newton_tol_rel * ||H||_F`.
    pub newton_tol_rel: f64,
    pub times: Vec<f64>,
    pub tolerances: SolverTolerances,
    pub thresholds: Thresholds,
    /// Bound on the similarity defect for listed solutions.
    pub similarity_threshold: f64,
}

impl OracleConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            newton_starts: 5,
            newton_max_iter: 100,
            newton_tol_rel: 1e-12,
            times: crate::verify::DEFAULT_TIMES.to_vec(),
            tolerances: SolverTolerances::default(),
            thresholds: Thresholds::default(),
            similarity_threshold: 1e-9,
        }
    }
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = gaussian_matrix(rng, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// `H±` from the Gaussian unitary ensemble, `V` complex Gaussian.
pub fn random_block_hamiltonian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> BlockHamiltonian {
    let h_plus = random_hermitian(rng, n);
    let h_minus = random_hermitian(rng, n);
    let v = gaussian_matrix(rng, n);
    BlockHamiltonian::new(h_plus, h_minus, v, ModelKind::Custom).expect("Hermitian by construction")
}

/// Everything needed to replay a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub h_plus: WireMatrix,
    pub h_minus: WireMatrix,
    pub v: WireMatrix,
}

impl Instance {
    pub fn of(h: &BlockHamiltonian) -> Self {
        Self { h_plus: encode_matrix(&h.h_plus), h_minus: encode_matrix(&h.h_minus), v: encode_matrix(&h.v) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonRun {
    pub start: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    /// Distance to the nearest exhaustive solution (converged runs only).
    pub distance_to_list: Option<f64>,
    pub matched: bool,
    pub quadratic: Option<QuadraticSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSummary {
    pub c: f64,
    pub pairs: usize,
    pub pass: bool,
}

impl From<&QuadraticFit> for QuadraticSummary {
    fn from(f: &QuadraticFit) -> Self {
        Self { c: f.c, pairs: f.pairs.len(), pass: f.pass }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub n: usize,
    pub exhaustive_solutions: usize,
    pub newton: Vec<NewtonRun>,
    /// Certification of each exhaustive solution and its `2N` states.
    pub certified: Vec<bool>,
    /// Similarity defects of the exhaustive solutions.
    pub similarity_defects: Vec<f64>,
    pub pass: bool,
    pub failure: Option<String>,
    pub instance: Instance,
}

impl TrialRecord {
    pub fn newton_matched(&self) -> usize {
        self.newton.iter().filter(|r| r.converged && r.matched).count()
    }

    pub fn newton_converged(&self) -> usize {
        self.newton.iter().filter(|r| r.converged).count()
    }
}

/// Runs one trial on `h`, drawing Newton starts from `rng`.
pub fn run_trial<R: Rng + ?Sized>(
    h: &BlockHamiltonian,
    rng: &mut R,
    trial: u64,
    cfg: &OracleConfig,
) -> TrialRecord {
    let mut record = TrialRecord {
        trial,
        n: h.n_env,
        exhaustive_solutions: 0,
        newton: Vec::new(),
        certified: Vec::new(),
        similarity_defects: Vec::new(),
        pass: false,
        failure: None,
        instance: Instance::of(h),
    };
    let list = match solve_invariant_subspace(h, &Strategy::Exhaustive, &cfg.tolerances) {
        Ok(list) => list,
        Err(e) => {
            record.failure = Some(format!("exhaustive enumeration failed: {e}"));
            return record;
        }
    };
    record.exhaustive_solutions = list.len();
    let mut failures: Vec<String> = Vec::new();
    if list.is_empty() {
        failures.push("exhaustive enumeration found no solution".into());
    }

    for (k, sol) in list.iter().enumerate() {
        match certify_solution(h, sol, cfg) {
            Ok((report, sim)) => {
                record.similarity_defects.push(sim);
                let ok = report.overall_pass && sim <= cfg.similarity_threshold;
                if !ok {
                    let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
                    failures.push(format!("solution {k} failed certification: {names:?} similarity {sim:.3e}"));
                }
                record.certified.push(ok);
            }
            Err(e) => {
                record.certified.push(false);
                failures.push(format!("solution {k} could not be certified: {e}"));
            }
        }
    }

    let newton_tol = cfg.newton_tol_rel * h.full_norm();
    for start in 0..cfg.newton_starts {
        let x0 = gaussian_matrix(rng, h.n_env);
        let run = match solve_newton(h, Some(&x0), cfg.newton_max_iter, newton_tol) {
            Ok(sol) => {
                let distance = list
                    .iter()
                    .map(|s| frobenius(&(&s.x - &sol.x)))
                    .fold(f64::INFINITY, f64::min);
                let matched = distance <= cfg.tolerances.dedup;
                if !matched {
                    failures.push(format!("Newton start {start} converged off the list (distance {distance:.3e})"));
                }
                let floor = rounding_floor(h, &sol);
                let quadratic = quadratic_fit(&sol.residual_history, 3, floor).map(|f| QuadraticSummary::from(&f));
                if let Some(q) = quadratic.filter(|q| !q.pass) {
                    failures.push(format!("Newton start {start} not quadratic (c = {:.3e})", q.c));
                }
                NewtonRun {
                    start,
                    converged: true,
                    iterations: sol.iterations(),
                    final_residual: sol.residual_primal,
                    distance_to_list: Some(distance),
                    matched,
                    quadratic,
                    error: None,
                }
            }
            // Non-convergent starts are expected from arbitrary initial guesses.
            Err(e) => NewtonRun {
                start,
                converged: false,
                iterations: 0,
                final_residual: f64::NAN,
                distance_to_list: None,
                matched: false,
                quadratic: None,
                error: Some(e.to_string()),
            },
        };
        record.newton.push(run);
    }

    record.pass = failures.is_empty();
    if !failures.is_empty() {
        record.failure = Some(failures.join("; "));
    }
    record
}

/// Residual level below which Newton steps carry no rate information.
pub fn rounding_floor(h: &BlockHamiltonian, sol: &RiccatiSolution) -> f64 {
    let scale = 1.0 + frobenius(&sol.x);
    100.0 * f64::EPSILON * h.full_norm() * scale * scale
}

fn certify_solution(
    h: &BlockHamiltonian,
    sol: &RiccatiSolution,
    cfg: &OracleConfig,
) -> Result<(VerificationReport, f64)> {
    let states = all_stationary_states(h, sol)?;
    let report = certify(h, sol, &states, &cfg.times, &cfg.thresholds)?;
    let sim = report.get("similarity").map_or(f64::NAN, |c| c.defect);
    Ok((report, sim))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSummary {
    pub config: OracleConfig,
    pub trials: Vec<TrialRecord>,
    pub pass: bool,
}

impl OracleSummary {
    pub fn failed(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(|t| !t.pass)
    }
}

pub fn run_oracle(cfg: &OracleConfig) -> OracleSummary {
    let trials: Vec<TrialRecord> = (0..cfg.trials as u64)
        .map(|k| {
            let mut rng = trial_rng(cfg.seed, k);
            let h = random_block_hamiltonian(&mut rng, cfg.n);
            run_trial(&h, &mut rng, k, cfg)
        })
        .collect();
    let pass = trials.iter().all(|t| t.pass);
    OracleSummary { config: cfg.clone(), trials, pass }
}
