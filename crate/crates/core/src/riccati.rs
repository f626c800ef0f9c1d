//! Bounded solutions of the operator Riccati equation
//!
//! ```text
//! X V X + X H+ - H- X - V^dagger = 0
//! ```
//!
//! and its dual `Y V^dagger Y + Y H- - H+ Y - V = 0`, which is solved by
//! `Y = -X^dagger` whenever `X` solves the primal equation. A solution `X`
//! corresponds to the invariant graph subspace `{[psi; X psi]}` of the full
//! Hamiltonian; the invariant-subspace solver inverts that correspondence.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockHamiltonian, ModelKind};
use crate::numerics::{
    c, eigh, frobenius, identity, smallest_singular_value, solve_linear_with_floor,
    sylvester_solve, ComplexMatrix, HermitianEigenResult, TOL_HERM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    InvariantSubspace,
    Newton,
    AnalyticParity,
    AnalyticF,
    SylvesterZero,
    AnalyticPmIdentity,
}

/// How the invariant-subspace solver picks `N` of the `2N` eigenvectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The `N` lowest eigenvalues.
    SpectralBottom,
    /// Greedy: repeatedly add the eigenvector that maximises `sigma_min` of the
    /// growing top block (ties by ascending eigenvalue).
    MaxInvertibility,
    /// Every `N`-subset; only for `N <= 6`.
    Exhaustive,
    /// A caller-chosen set of eigenindices (ascending-eigenvalue order).
    Explicit(Vec<usize>),
}

pub const EXHAUSTIVE_MAX_N: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverTolerances {
    /// Acceptance threshold relative to `||H||_F`.
    pub tol_acc_rel: f64,
    /// Minimum `sigma_min` of the top block `W1`.
    pub kappa_floor: f64,
    /// Frobenius distance below which two solutions are the same.
    pub dedup: f64,
    pub tol_herm: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self { tol_acc_rel: 1e-8, kappa_floor: 1e-8, dedup: 1e-6, tol_herm: TOL_HERM }
    }
}

impl SolverTolerances {
    pub fn tol_acc(&self, h: &BlockHamiltonian) -> f64 {
        self.tol_acc_rel * h.full_norm().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub x: ComplexMatrix,
    /// `||X V X + X H+ - H- X - V^dagger||_F`.
    pub residual_primal: f64,
    /// Dual residual at `Y = -X^dagger`.
    pub residual_dual: f64,
    pub method: Method,
    /// Eigenindices of the selected subspace, for invariant-subspace solutions.
    pub selection: Option<Vec<usize>>,
    /// The selection contains part, but not all, of an eigenvalue cluster.
    pub splits_cluster: bool,
    /// Newton residual norms, starting with the initial guess.
    pub residual_history: Vec<f64>,
}

impl RiccatiSolution {
    pub fn measure(h: &BlockHamiltonian, x: ComplexMatrix, method: Method) -> Result<Self> {
        let residual_primal = frobenius(&residual_primal(h, &x)?);
        let residual_dual = frobenius(&residual_dual(h, &(-x.adjoint()))?);
        Ok(Self {
            x,
            residual_primal,
            residual_dual,
            method,
            selection: None,
            splits_cluster: false,
            residual_history: Vec::new(),
        })
    }

    pub fn is_accepted(&self, tol_acc: f64) -> bool {
        self.residual_primal <= tol_acc
    }

    pub fn iterations(&self) -> usize {
        self.residual_history.len().saturating_sub(1)
    }
}

fn check_square(h: &BlockHamiltonian, x: &ComplexMatrix) -> Result<()> {
    if x.shape() != (h.n_env, h.n_env) {
        return Err(Error::DimensionMismatch(format!(
            "X is {}x{}, environment dimension is {}",
            x.nrows(),
            x.ncols(),
            h.n_env
        )));
    }
    Ok(())
}

/// `X V X + X H+ - H- X - V^dagger`.
pub fn residual_primal(h: &BlockHamiltonian, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(h, x)?;
    Ok(x * &h.v * x + x * &h.h_plus - &h.h_minus * x - h.v.adjoint())
}

/// `Y V^dagger Y + Y H- - H+ Y - V`.
pub fn residual_dual(h: &BlockHamiltonian, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(h, y)?;
    Ok(y * h.v.adjoint() * y + y * &h.h_minus - &h.h_plus * y - &h.v)
}

/// Orthogonal projector onto the graph `{[psi; X psi]}`:
/// `[I; X] (I + X^dagger X)^-1 [I, X^dagger]`.
pub fn graph_projector(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = x.nrows();
    let mut basis = ComplexMatrix::zeros(2 * n, n);
    basis.view_mut((0, 0), (n, n)).copy_from(&identity(n));
    basis.view_mut((n, 0), (n, n)).copy_from(x);
    let gram = identity(n) + x.adjoint() * x;
    let inv_gram = solve_linear_with_floor(&gram, &identity(n), 0.0)?.x;
    Ok(&basis * inv_gram * basis.adjoint())
}

/// `||(I - Pi) H Pi||_F` for the graph projector `Pi`; zero exactly when the
/// graph is invariant under `H`.
pub fn graph_invariance_defect(h: &BlockHamiltonian, x: &ComplexMatrix) -> Result<f64> {
    check_square(h, x)?;
    let pi = graph_projector(x)?;
    let complement = identity(2 * h.n_env) - &pi;
    Ok(frobenius(&(complement * h.full() * pi)))
}

/// Inverts the graph/invariant-subspace correspondence: picks `N` eigenvectors
/// of the full Hamiltonian, stacks them as `[W1; W2]` and returns
/// `X = W2 W1^-1` for every accepted selection.
///
/// Single-selection strategies return one solution or an error; `Exhaustive`
/// returns every accepted, pairwise-distinct solution in subset-lexicographic
/// order.
pub fn solve_invariant_subspace(
    h: &BlockHamiltonian,
    strategy: &Strategy,
    tol: &SolverTolerances,
) -> Result<Vec<RiccatiSolution>> {
    let eig = eigh(&h.full(), tol.tol_herm)?;
    let tol_acc = tol.tol_acc(h);
    let n = h.n_env;

    let selection = match strategy {
        Strategy::SpectralBottom => (0..n).collect(),
        Strategy::MaxInvertibility => greedy_selection(&eig, n),
        Strategy::Explicit(indices) => {
            let mut sel = indices.clone();
            sel.sort_unstable();
            sel.dedup();
            if sel.len() != n || sel.iter().any(|&k| k >= 2 * n) {
                return Err(Error::InvalidParameter(format!(
                    "explicit selection must name {n} distinct indices below {}",
                    2 * n
                )));
            }
            sel
        }
        Strategy::Exhaustive => return exhaustive(h, &eig, tol, tol_acc),
    };

    let sol = solution_from_selection(h, &eig, &selection, tol.kappa_floor)?
        .ok_or(Error::NoInvertibleSelection)?;
    if !sol.is_accepted(tol_acc) {
        return Err(Error::NotAccepted { residual: sol.residual_primal, tol: tol_acc });
    }
    Ok(vec![sol])
}

fn exhaustive(
    h: &BlockHamiltonian,
    eig: &HermitianEigenResult,
    tol: &SolverTolerances,
    tol_acc: f64,
) -> Result<Vec<RiccatiSolution>> {
    let n = h.n_env;
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::InvalidParameter(format!(
            "exhaustive enumeration is limited to N <= {EXHAUSTIVE_MAX_N}, got {n}"
        )));
    }
    let mut any_invertible = false;
    let mut found: Vec<RiccatiSolution> = Vec::new();
    for subset in (0..2 * n).combinations(n) {
        let Some(sol) = solution_from_selection(h, eig, &subset, tol.kappa_floor)? else {
            continue;
        };
        any_invertible = true;
        if !sol.is_accepted(tol_acc) {
            continue;
        }
        if found.iter().all(|f| frobenius(&(&f.x - &sol.x)) > tol.dedup) {
            found.push(sol);
        }
    }
    if !any_invertible {
        return Err(Error::NoInvertibleSelection);
    }
    Ok(found)
}

fn top_block(eig: &HermitianEigenResult, n: usize, selection: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, selection.len(), |i, j| eig.eigenvectors[(i, selection[j])])
}

fn greedy_selection(eig: &HermitianEigenResult, n: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for k in (0..2 * n).filter(|k| !chosen.contains(k)) {
            let mut trial = chosen.clone();
            trial.push(k);
            let s = smallest_singular_value(&top_block(eig, n, &trial));
            // Candidates come in ascending-eigenvalue order, so only a clear
            // improvement displaces an earlier one.
            if best.is_none_or(|(_, b)| s > b * (1.0 + 1e-12) + 1e-15) {
                best = Some((k, s));
            }
        }
        chosen.push(best.expect("2N > N candidates").0);
    }
    chosen.sort_unstable();
    chosen
}

/// `Ok(None)` when the top block fails the invertibility floor.
fn solution_from_selection(
    h: &BlockHamiltonian,
    eig: &HermitianEigenResult,
    selection: &[usize],
    kappa_floor: f64,
) -> Result<Option<RiccatiSolution>> {
    let n = h.n_env;
    let w1 = top_block(eig, n, selection);
    if smallest_singular_value(&w1) < kappa_floor {
        return Ok(None);
    }
    let w2 = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(n + i, selection[j])]);
    // X W1 = W2  <=>  W1^dagger X^dagger = W2^dagger.
    let x = match solve_linear_with_floor(&w1.adjoint(), &w2.adjoint(), 0.0) {
        Ok(s) => s.x.adjoint(),
        Err(Error::SingularMatrix { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut sol = RiccatiSolution::measure(h, x, Method::InvariantSubspace)?;
    sol.splits_cluster = eig.clusters.iter().any(|r| {
        let inside = selection.iter().filter(|k| r.contains(k)).count();
        inside > 0 && inside < r.len()
    });
    sol.selection = Some(selection.to_vec());
    Ok(Some(sol))
}

/// Newton's method on the Riccati map. Each step solves the Sylvester equation
/// `(H- - X V) D - D (H+ + V X) = R(X)` and sets `X <- X + D`.
///
/// Starts from `X = 0` when `x0` is `None`.
pub fn solve_newton(
    h: &BlockHamiltonian,
    x0: Option<&ComplexMatrix>,
    max_iter: usize,
    tol: f64,
) -> Result<RiccatiSolution> {
    let n = h.n_env;
    let mut x = match x0 {
        Some(x0) => {
            check_square(h, x0)?;
            x0.clone()
        }
        None => ComplexMatrix::zeros(n, n),
    };
    let mut r = residual_primal(h, &x)?;
    let mut history = vec![frobenius(&r)];
    let mut steps = 0;
    while history[steps] > tol {
        if steps == max_iter || !history[steps].is_finite() {
            return Err(Error::MaxIterExceeded { iterations: steps, residual: history[steps] });
        }
        let a = &h.h_minus - &x * &h.v;
        let b = &h.h_plus + &h.v * &x;
        let delta = sylvester_solve(&a, &b, &r)?;
        x += delta;
        r = residual_primal(h, &x)?;
        history.push(frobenius(&r));
        steps += 1;
    }
    let mut sol = RiccatiSolution::measure(h, x, Method::Newton)?;
    sol.residual_history = history;
    Ok(sol)
}

/// Fit of `r_{k+1} = c r_k^2` over the tail of a residual sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFit {
    /// Fitted constant (geometric mean of `r_{k+1} / r_k^2`).
    pub c: f64,
    /// `(r_k, r_{k+1})` pairs that entered the fit.
    pub pairs: Vec<(f64, f64)>,
    /// Every fitted pair satisfies `r_{k+1} <= 10 c r_k^2`.
    pub pass: bool,
}

/// Checks local quadratic convergence over the last `window` Newton steps.
/// A step whose output residual is at or below `floor` has hit rounding and
/// carries no rate information: it counts as satisfied and stays out of the
/// fit. Returns `None` when no step in the window is above the floor.
pub fn quadratic_fit(history: &[f64], window: usize, floor: f64) -> Option<QuadraticFit> {
    let steps: Vec<(f64, f64)> = history.windows(2).map(|w| (w[0], w[1])).collect();
    let pairs: Vec<(f64, f64)> = steps[steps.len().saturating_sub(window)..]
        .iter()
        .copied()
        .filter(|&(a, b)| b > floor && a > 0.0)
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let mean_log = pairs.iter().map(|&(a, b)| (b / (a * a)).ln()).sum::<f64>() / pairs.len() as f64;
    let c = mean_log.exp();
    let pass = pairs.iter().all(|&(a, b)| b <= 10.0 * c * a * a);
    Some(QuadraticFit { c, pairs, pass })
}

/// Which closed-form family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticModel {
    /// Unbiased spin-boson: `X = P`.
    SpinBoson,
    /// Commuting environment: `X = f(H1)`, `f(x) = (sqrt(x^2 + alpha^2) - x) / alpha`.
    Commuting,
    /// `H+ = H- = H0`, `V = V^dagger`: `X = +I` and `X = -I`.
    EqualDiagonal,
    /// `V = 0`: `X = 0`.
    ZeroCoupling,
}

/// The function `f` whose spectral image of `H1` solves the commuting model.
pub fn commuting_f(x: f64, alpha: f64) -> f64 {
    ((x * x + alpha * alpha).sqrt() - x) / alpha
}

/// Closed-form solutions, each with measured residuals.
pub fn analytic_solutions(h: &BlockHamiltonian, model: AnalyticModel) -> Result<Vec<RiccatiSolution>> {
    let n = h.n_env;
    match (model, &h.kind) {
        (AnalyticModel::SpinBoson, ModelKind::SpinBoson { beta, .. }) => {
            if *beta != 0.0 {
                return Err(Error::WrongModel(format!(
                    "the parity solution needs beta = 0, got {beta}"
                )));
            }
            let p = crate::model::parity_operator(n);
            Ok(vec![RiccatiSolution::measure(h, p, Method::AnalyticParity)?])
        }
        (AnalyticModel::Commuting, ModelKind::Commuting { alpha }) => {
            let h1 = (&h.h_plus - &h.h_minus) * c(0.5, 0.0);
            let alpha = *alpha;
            let x = eigh(&h1, TOL_HERM)?.apply_function(|xi| c(commuting_f(xi, alpha), 0.0));
            Ok(vec![RiccatiSolution::measure(h, x, Method::AnalyticF)?])
        }
        (AnalyticModel::EqualDiagonal, ModelKind::EqualDiagonal) => Ok(vec![
            RiccatiSolution::measure(h, identity(n), Method::AnalyticPmIdentity)?,
            RiccatiSolution::measure(h, -identity(n), Method::AnalyticPmIdentity)?,
        ]),
        (AnalyticModel::ZeroCoupling, _) if h.is_decoupled() => {
            Ok(vec![RiccatiSolution::measure(h, ComplexMatrix::zeros(n, n), Method::SylvesterZero)?])
        }
        (model, kind) => Err(Error::WrongModel(format!(
            "{model:?} closed form does not apply to a {kind:?} Hamiltonian"
        ))),
    }
}

/// The closed form matching how `h` was built, if there is one.
pub fn default_analytic_model(h: &BlockHamiltonian) -> Option<AnalyticModel> {
    match h.kind {
        _ if h.is_decoupled() => Some(AnalyticModel::ZeroCoupling),
        ModelKind::SpinBoson { beta: 0.0, .. } => Some(AnalyticModel::SpinBoson),
        ModelKind::Commuting { .. } => Some(AnalyticModel::Commuting),
        ModelKind::EqualDiagonal => Some(AnalyticModel::EqualDiagonal),
        _ => None,
    }
}
