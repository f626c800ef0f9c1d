//! End-to-end certification on the full `2N x 2N` system.
//!
//! Nothing here trusts the extraction path: eigenpairs are checked against
//! `H` itself, and stationarity is checked by evolving the total pure state
//! with `exp(-i H t)` and tracing out the environment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BlockHamiltonian;
use crate::numerics::{
    block2, eigh, frobenius, hermiticity_defect, identity, smallest_singular_value, vec_norm,
    ComplexMatrix, ComplexVector, Propagator, TOL_HERM,
};
use crate::riccati::{graph_invariance_defect, RiccatiSolution};
use crate::stationary::{
    eig_z, reduced_state_of_vector, z_minus, z_plus, Branch, GraphVector, RiccatiState,
};

pub const DEFAULT_TIMES: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
/// Default threshold for every relative defect.
pub const DEFAULT_THRESHOLD: f64 = 1e-8;
/// A control vector must be at least this far from an eigenvector.
pub const CONTROL_MIN_EIGEN_DEFECT: f64 = 0.01;
/// A control is only meaningful if it moves by more than this.
pub const CONTROL_MIN_DEVIATION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub defect: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub times_sampled: Vec<f64>,
    pub overall_pass: bool,
}

impl VerificationReport {
    pub fn new(times: &[f64]) -> Self {
        Self { checks: Vec::new(), times_sampled: times.to_vec(), overall_pass: true }
    }

    pub fn record(&mut self, name: impl Into<String>, defect: f64, threshold: f64) -> bool {
        // NaN defects fail.
        let pass = defect <= threshold;
        self.overall_pass &= pass;
        self.checks.push(Check { name: name.into(), defect, threshold, pass });
        pass
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.overall_pass &= other.overall_pass;
        self.checks.extend(other.checks);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `||H v - lambda v|| / ||v||`.
pub fn check_eigenpair(h_full: &ComplexMatrix, vec: &ComplexVector, lam: f64) -> f64 {
    let r = h_full * vec - vec * crate::numerics::c(lam, 0.0);
    vec_norm(&r) / vec_norm(vec)
}

/// `S = [[I, -X^dagger], [X, I]]`.
pub fn similarity_matrix(x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.nrows();
    block2(&identity(n), &(-x.adjoint()), x, &identity(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityCheck {
    /// `||H S - S diag(Z+, Z-)||_F / ||H||_F`.
    pub defect: f64,
    /// `sigma_min(S)`; at least one for any `X`.
    pub sigma_min: f64,
}

pub fn check_similarity(h: &BlockHamiltonian, sol: &RiccatiSolution) -> SimilarityCheck {
    let x = &sol.x;
    let s = similarity_matrix(x);
    let n = h.n_env;
    let zeros = ComplexMatrix::zeros(n, n);
    let zdiag = block2(&z_plus(h, x), &zeros, &zeros, &z_minus(h, x));
    let hf = h.full();
    let defect = frobenius(&(&hf * &s - &s * zdiag)) / frobenius(&hf).max(f64::MIN_POSITIVE);
    SimilarityCheck { defect, sigma_min: smallest_singular_value(&s) }
}

/// Largest gap between the sorted multiset `sigma(Z+) ∪ sigma(Z-)` and `sigma(H)`.
pub fn spectrum_union_defect(h: &BlockHamiltonian, sol: &RiccatiSolution) -> Result<f64> {
    let x = &sol.x;
    let mut union: Vec<f64> = eig_z(&z_plus(h, x), x, Branch::Graph)?
        .into_iter()
        .chain(eig_z(&z_minus(h, x), x, Branch::Complement)?)
        .map(|p| p.eigenvalue)
        .collect();
    union.sort_by(f64::total_cmp);
    let full = eigh(&h.full(), TOL_HERM)?.eigenvalues;
    Ok(union
        .iter()
        .zip(&full)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Reduced dynamics of pure total states under a fixed Hamiltonian.
#[derive(Debug, Clone)]
pub struct ReducedEvolution {
    propagator: Propagator,
}

impl ReducedEvolution {
    pub fn new(h: &BlockHamiltonian) -> Result<Self> {
        Ok(Self { propagator: Propagator::new(&h.full(), TOL_HERM)? })
    }

    /// `Tr_E[U_t w w^dagger U_t^dagger] / |w|^2`.
    pub fn reduced_state(&self, w: &ComplexVector, t: f64) -> Result<ComplexMatrix> {
        reduced_state_of_vector(&self.propagator.apply(t, w))
    }

    /// `max_t ||rho(t) - rho(0)||_F`.
    pub fn max_deviation(&self, w: &ComplexVector, times: &[f64]) -> Result<f64> {
        let rho0 = reduced_state_of_vector(w)?;
        let mut worst: f64 = 0.0;
        for &t in times {
            worst = worst.max(frobenius(&(self.reduced_state(w, t)? - &rho0)));
        }
        Ok(worst)
    }
}

/// Largest deviation of the evolved reduced state from the `t = 0` reduced
/// state of the same total vector, over the sampled times.
pub fn check_stationarity(h: &BlockHamiltonian, state: &RiccatiState, times: &[f64]) -> Result<f64> {
    ReducedEvolution::new(h)?.max_deviation(&state.source.stacked, times)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutcome {
    /// Distance of the graph vector from being an eigenvector of `H`
    /// (Rayleigh-quotient eigenpair defect).
    pub eigen_defect: f64,
    pub deviation: f64,
}

/// Negative control: the graph vector of a non-eigenvector must visibly move.
/// Fails with `ControlTooClose` for (near-)eigenvectors and with
/// `ControlDegenerate` when nothing moves, i.e. the check would have no power.
pub fn check_nonstationary_control(
    h: &BlockHamiltonian,
    x: &ComplexMatrix,
    env_vector: &ComplexVector,
    times: &[f64],
) -> Result<ControlOutcome> {
    let w = GraphVector::new(x, env_vector.clone(), Branch::Graph)?.stacked;
    let hf = h.full();
    let lam = (w.dotc(&(&hf * &w)) / w.norm_squared()).re;
    let eigen_defect = check_eigenpair(&hf, &w, lam);
    if eigen_defect <= CONTROL_MIN_EIGEN_DEFECT {
        return Err(Error::ControlTooClose { defect: eigen_defect });
    }
    let deviation = ReducedEvolution::new(h)?.max_deviation(&w, times)?;
    if deviation <= CONTROL_MIN_DEVIATION {
        return Err(Error::ControlDegenerate { deviation });
    }
    Ok(ControlOutcome { eigen_defect, deviation })
}

/// Equal superposition of the two `Z+` eigenvectors, with distinct
/// eigenvalues, whose graph vectors have the largest reduced cross term.
/// Returns the environment vector and the eigenvalue gap.
pub fn control_superposition(h: &BlockHamiltonian, x: &ComplexMatrix) -> Result<Option<(ComplexVector, f64)>> {
    let pairs = eig_z(&z_plus(h, x), x, Branch::Graph)?;
    let lifted: Vec<ComplexVector> = pairs
        .iter()
        .map(|p| GraphVector::new(x, p.vector.clone(), Branch::Graph).map(|g| g.stacked))
        .collect::<Result<_>>()?;
    let n = h.n_env;
    let scale = h.full_norm();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if (pairs[j].eigenvalue - pairs[i].eigenvalue).abs() <= 1e-6 * scale {
                continue;
            }
            let (wi, wj) = (&lifted[i], &lifted[j]);
            let cross = [
                wj.rows(0, n).dotc(&wi.rows(0, n)),
                wj.rows(n, n).dotc(&wi.rows(0, n)),
                wj.rows(0, n).dotc(&wi.rows(n, n)),
                wj.rows(n, n).dotc(&wi.rows(n, n)),
            ]
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
                / (wi.norm() * wj.norm());
            if best.is_none_or(|(_, _, b)| cross > b) {
                best = Some((i, j, cross));
            }
        }
    }
    Ok(best.map(|(i, j, _)| {
        let mut psi = &pairs[i].vector + &pairs[j].vector;
        psi.unscale_mut(psi.norm());
        (psi, (pairs[j].eigenvalue - pairs[i].eigenvalue).abs())
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Residuals, similarity, invariance, spectrum and eigenpair defects,
    /// all relative to `||H||_F`.
    pub relative: f64,
    /// Absolute bound on reduced-state deviations (dimensionless).
    pub stationarity: f64,
    /// Density-matrix sanity (trace, Hermiticity, positivity).
    pub density: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { relative: DEFAULT_THRESHOLD, stationarity: DEFAULT_THRESHOLD, density: 1e-12 }
    }
}

/// Runs the full certification chain for one solution and its states:
/// residuals, graph invariance, similarity, spectrum union, and for every
/// state its density-matrix sanity, eigenpair defect, closed-form consistency
/// and stationarity at every sampled time.
pub fn certify(
    h: &BlockHamiltonian,
    sol: &RiccatiSolution,
    states: &[RiccatiState],
    times: &[f64],
    th: &Thresholds,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(times);
    let hf = h.full();
    let h_norm = frobenius(&hf).max(f64::MIN_POSITIVE);

    report.record("residual_primal", sol.residual_primal / h_norm, th.relative);
    report.record("residual_dual", sol.residual_dual / h_norm, th.relative);
    report.record("graph_invariance", graph_invariance_defect(h, &sol.x)? / h_norm, th.relative);
    let sim = check_similarity(h, sol);
    report.record("similarity", sim.defect, th.relative);
    report.record("similarity_invertible", (1.0 - sim.sigma_min).max(0.0), 1e-12);
    report.record("spectrum_union", spectrum_union_defect(h, sol)? / h_norm, th.relative);

    let evolution = ReducedEvolution::new(h)?;
    for (k, state) in states.iter().enumerate() {
        let w = &state.source.stacked;
        report.record(format!("state[{k}].density"), density_defect(&state.rho), th.density);
        let lam = state.eigenvalue.unwrap_or_else(|| (w.dotc(&(&hf * w)) / w.norm_squared()).re);
        report.record(format!("state[{k}].eigenpair"), check_eigenpair(&hf, w, lam) / h_norm, th.relative);
        let rho0 = reduced_state_of_vector(w)?;
        report.record(format!("state[{k}].closed_form"), frobenius(&(&rho0 - &state.rho)), th.density);
        report.record(
            format!("state[{k}].stationarity"),
            evolution.max_deviation(w, times)?,
            th.stationarity,
        );
    }
    Ok(report)
}

/// Largest violation of Hermiticity, unit trace and positivity for a 2x2 state.
pub fn density_defect(rho: &ComplexMatrix) -> f64 {
    let herm = hermiticity_defect(rho) * frobenius(rho);
    let trace = (rho.trace() - crate::numerics::c(1.0, 0.0)).norm();
    let t = rho.trace().re;
    let det = (rho[(0, 0)] * rho[(1, 1)] - rho[(0, 1)] * rho[(1, 0)]).re;
    let min_eig = t / 2.0 - (t * t / 4.0 - det).max(0.0).sqrt();
    herm.max(trace).max((-min_eig).max(0.0))
}
