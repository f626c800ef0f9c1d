//! Riccati stationary states of the qubit.
//!
//! Given a solution `X`, the graph `{[psi; X psi]}` and its orthogonal
//! complement `{[-X^dagger phi; phi]}` are invariant under the full
//! Hamiltonian, on which it acts as `Z+ = H+ + V X` and `Z- = H- - V^dagger X^dagger`
//! respectively. Every eigenvector of `Z±` lifts to an eigenvector of `H`, and
//! the partial trace of its projector is a stationary qubit state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BlockHamiltonian;
use crate::numerics::{
    c, eigh, frobenius, hermiticity_defect, identity, vec_norm, ComplexMatrix, ComplexVector, C64,
};
use crate::riccati::RiccatiSolution;

/// Relative Hermiticity defect tolerated in `G^{1/2} Z G^{-1/2}`.
pub const TOL_SIMILARITY: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `[psi; X psi]`, eigenvectors of `Z+`.
    Graph,
    /// `[-X^dagger phi; phi]`, eigenvectors of `Z-`.
    Complement,
}

pub fn z_plus(h: &BlockHamiltonian, x: &ComplexMatrix) -> ComplexMatrix {
    &h.h_plus + &h.v * x
}

pub fn z_minus(h: &BlockHamiltonian, x: &ComplexMatrix) -> ComplexMatrix {
    &h.h_minus - h.v.adjoint() * x.adjoint()
}

/// An eigenpair of `Z+` or `Z-`.
#[derive(Debug, Clone)]
pub struct ZEigenpair {
    pub eigenvalue: f64,
    /// Unit norm in the plain environment inner product.
    pub vector: ComplexVector,
    /// Size of the eigenvalue cluster this pair belongs to. Above one, the
    /// individual vector depends on the basis chosen within the cluster.
    pub cluster_size: usize,
}

/// Gram operator of the graph (`I + X^dagger X`) or complement (`I + X X^dagger`)
/// inner product.
pub fn gram(x: &ComplexMatrix, branch: Branch) -> ComplexMatrix {
    let n = x.nrows();
    match branch {
        Branch::Graph => identity(n) + x.adjoint() * x,
        Branch::Complement => identity(n) + x * x.adjoint(),
    }
}

/// Diagonalises `Z±` through the Hermitian matrix `M = G^{1/2} Z G^{-1/2}`.
/// Results are ordered by ascending eigenvalue.
pub fn eig_z(z: &ComplexMatrix, x: &ComplexMatrix, branch: Branch) -> Result<Vec<ZEigenpair>> {
    eig_z_with_tol(z, x, branch, TOL_SIMILARITY)
}

pub fn eig_z_with_tol(
    z: &ComplexMatrix,
    x: &ComplexMatrix,
    branch: Branch,
    tol: f64,
) -> Result<Vec<ZEigenpair>> {
    if z.shape() != x.shape() || !z.is_square() {
        return Err(Error::DimensionMismatch(format!("Z {:?}, X {:?}", z.shape(), x.shape())));
    }
    let g = eigh(&gram(x, branch), f64::INFINITY)?;
    let sqrt_g = g.apply_function(|l| c(l.sqrt(), 0.0));
    let inv_sqrt_g = g.apply_function(|l| c(1.0 / l.sqrt(), 0.0));
    let m = &sqrt_g * z * &inv_sqrt_g;
    let defect = hermiticity_defect(&m);
    if defect > tol {
        return Err(Error::SimilarityDefect { defect });
    }
    let eig = eigh(&m, f64::INFINITY)?;
    let pairs = (0..eig.dim())
        .map(|k| {
            let mut v = &inv_sqrt_g * eig.vector(k);
            let norm = vec_norm(&v);
            v.unscale_mut(norm);
            ZEigenpair {
                eigenvalue: eig.eigenvalues[k],
                vector: v,
                cluster_size: eig.clusters[eig.cluster_of(k)].len(),
            }
        })
        .collect();
    Ok(pairs)
}

/// A `2N` vector of the graph or its complement.
#[derive(Debug, Clone)]
pub struct GraphVector {
    pub kind: Branch,
    pub env_vector: ComplexVector,
    /// `[psi; X psi]` or `[-X^dagger phi; phi]`.
    pub stacked: ComplexVector,
}

impl GraphVector {
    pub fn new(x: &ComplexMatrix, env_vector: ComplexVector, kind: Branch) -> Result<Self> {
        let n = x.nrows();
        if env_vector.len() != n || !x.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "environment vector has length {}, X is {}x{}",
                env_vector.len(),
                x.nrows(),
                x.ncols()
            )));
        }
        let (top, bottom) = match kind {
            Branch::Graph => (env_vector.clone(), x * &env_vector),
            Branch::Complement => (-(x.adjoint() * &env_vector), env_vector.clone()),
        };
        let mut stacked = ComplexVector::zeros(2 * n);
        stacked.rows_mut(0, n).copy_from(&top);
        stacked.rows_mut(n, n).copy_from(&bottom);
        Ok(Self { kind, env_vector, stacked })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.stacked.norm_squared()
    }

    /// Total pure state `w w^dagger / |w|^2`.
    pub fn density(&self) -> ComplexMatrix {
        let w = &self.stacked;
        w * w.adjoint() / c(self.norm_sqr(), 0.0)
    }
}

/// A stationary qubit state generated by one eigenvector of `Z±`.
#[derive(Debug, Clone)]
pub struct RiccatiState {
    /// 2x2 density matrix.
    pub rho: ComplexMatrix,
    /// Eigenvalue of `Z±` (and of `H`) the source vector belongs to, when known.
    pub eigenvalue: Option<f64>,
    pub source: GraphVector,
    /// The constant that gives `rho` unit trace.
    pub normalization: f64,
    /// The source eigenvalue is part of a degenerate cluster.
    pub degenerate: bool,
}

impl RiccatiState {
    pub fn kind(&self) -> Branch {
        self.source.kind
    }
}

/// Closed-form reduced state of a graph or complement vector:
///
/// ```text
/// graph:       A [[|psi|^2, <X>*], [<X>, |X psi|^2]],      A = 1 / (|psi|^2 + |X psi|^2)
/// complement:  B [[|X^dagger phi|^2, -<X>*], [-<X>, |phi|^2]], B = 1 / (|X^dagger phi|^2 + |phi|^2)
/// ```
///
/// with `<X> = <v|X|v>` for the environment vector `v`.
pub fn riccati_state(x: &ComplexMatrix, env_vector: &ComplexVector, kind: Branch) -> Result<RiccatiState> {
    let source = GraphVector::new(x, env_vector.clone(), kind)?;
    let v = env_vector;
    let v_sq = v.norm_squared();
    if v_sq == 0.0 || !v_sq.is_finite() {
        return Err(Error::ZeroVector);
    }
    let expect_x: C64 = v.dotc(&(x * v));
    let (d0, off, d1) = match kind {
        Branch::Graph => (v_sq, expect_x.conj(), (x * v).norm_squared()),
        Branch::Complement => ((x.adjoint() * v).norm_squared(), -expect_x.conj(), v_sq),
    };
    let normalization = 1.0 / (d0 + d1);
    let rho = ComplexMatrix::from_row_slice(2, 2, &[c(d0, 0.0), off, off.conj(), c(d1, 0.0)])
        * c(normalization, 0.0);
    Ok(RiccatiState { rho, eigenvalue: None, source, normalization, degenerate: false })
}

/// `[[Tr M11, Tr M12], [Tr M21, Tr M22]]` for a `2N x 2N` matrix.
pub fn partial_trace(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let dim = m.nrows();
    if !dim.is_multiple_of(2) {
        return Err(Error::OddDimension(dim));
    }
    let n = dim / 2;
    Ok(ComplexMatrix::from_fn(2, 2, |i, j| m.view((i * n, j * n), (n, n)).trace()))
}

/// Reduced state of the pure total state along `w`, without forming `w w^dagger`.
pub fn reduced_state_of_vector(w: &ComplexVector) -> Result<ComplexMatrix> {
    if !w.len().is_multiple_of(2) {
        return Err(Error::OddDimension(w.len()));
    }
    let n = w.len() / 2;
    let norm_sq = w.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let top = w.rows(0, n);
    let bottom = w.rows(n, n);
    let blocks = [[top.dotc(&top), bottom.dotc(&top)], [top.dotc(&bottom), bottom.dotc(&bottom)]];
    Ok(ComplexMatrix::from_fn(2, 2, |i, j| blocks[i][j] / norm_sq))
}

/// All `2N` Riccati states of an accepted solution: graph branch (eigenvectors
/// of `Z+`) first, then the complement branch (`Z-`), each by ascending
/// eigenvalue.
pub fn all_stationary_states(h: &BlockHamiltonian, sol: &RiccatiSolution) -> Result<Vec<RiccatiState>> {
    let x = &sol.x;
    let mut states = Vec::with_capacity(2 * h.n_env);
    for (branch, z) in [(Branch::Graph, z_plus(h, x)), (Branch::Complement, z_minus(h, x))] {
        for pair in eig_z(&z, x, branch)? {
            let mut state = riccati_state(x, &pair.vector, branch)?;
            state.eigenvalue = Some(pair.eigenvalue);
            state.degenerate = pair.cluster_size > 1;
            states.push(state);
        }
    }
    Ok(states)
}

/// `<v|P|v> / <v|v>` for the environment vector of a state; real for
/// Hermitian `P`.
pub fn expectation(op: &ComplexMatrix, v: &ComplexVector) -> C64 {
    v.dotc(&(op * v)) / v.norm_squared()
}

/// Hermitian, unit trace, eigenvalues above `-tol`.
pub fn is_density_matrix(rho: &ComplexMatrix, tol: f64) -> bool {
    if rho.shape() != (2, 2) {
        return false;
    }
    let herm = frobenius(&(rho - rho.adjoint())) <= tol;
    let tr = rho.trace();
    let unit = (tr - c(1.0, 0.0)).norm() <= tol;
    // 2x2 Hermitian eigenvalues from trace and determinant.
    let t = tr.re;
    let det = (rho[(0, 0)] * rho[(1, 1)] - rho[(0, 1)] * rho[(1, 0)]).re;
    let disc = (t * t / 4.0 - det).max(0.0).sqrt();
    herm && unit && t / 2.0 - disc >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_spin_boson, ModelKind, SpinBosonParams};
    use crate::numerics::{approx_eq, diag_real, from_real_rows};
    use crate::riccati::{Method, RiccatiSolution};

    #[test]
    fn z_with_zero_coupling() {
        let h = BlockHamiltonian::new(
            diag_real(&[1.0, 2.0]),
            diag_real(&[-1.0, 0.5]),
            ComplexMatrix::zeros(2, 2),
            ModelKind::Custom,
        )
        .unwrap();
        let x = from_real_rows(2, 2, &[0.3, 0.1, -0.2, 0.0]);
        assert!(approx_eq(&z_plus(&h, &x), &h.h_plus, 0.0));
        assert!(approx_eq(&z_minus(&h, &x), &h.h_minus, 0.0));
    }

    #[test]
    fn z_spin_boson_parity() {
        let p = SpinBosonParams { n_env: 6, omega: 1.0, g: c(0.2, 0.0), alpha: 0.5, beta: 0.0 };
        let (h, ops) = build_spin_boson(&p).unwrap();
        let zp = z_plus(&h, &ops.parity);
        assert!(approx_eq(&zp, &(&h.h_plus + &ops.parity * c(0.5, 0.0)), 1e-15));
        let zm = z_minus(&h, &ops.parity);
        assert!(approx_eq(&zm, &(&h.h_minus - &ops.parity * c(0.5, 0.0)), 1e-15));
    }

    #[test]
    fn eig_z_diagonal_zero_x() {
        let z = diag_real(&[2.0, -1.0, 0.5]);
        let pairs = eig_z(&z, &ComplexMatrix::zeros(3, 3), Branch::Graph).unwrap();
        let vals: Vec<f64> = pairs.iter().map(|p| p.eigenvalue).collect();
        assert_eq!(vals, vec![-1.0, 0.5, 2.0]);
        assert!((pairs[0].vector[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eig_z_rejects_non_solution() {
        let z = from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let x = ComplexMatrix::zeros(2, 2);
        assert!(matches!(eig_z(&z, &x, Branch::Graph), Err(Error::SimilarityDefect { .. })));
    }

    #[test]
    fn zero_x_graph_state_is_projector() {
        let psi = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let s = riccati_state(&ComplexMatrix::zeros(2, 2), &psi, Branch::Graph).unwrap();
        assert!(approx_eq(&s.rho, &diag_real(&[1.0, 0.0]), 0.0));
        let s = riccati_state(&ComplexMatrix::zeros(2, 2), &psi, Branch::Complement).unwrap();
        assert!(approx_eq(&s.rho, &diag_real(&[0.0, 1.0]), 0.0));
    }

    #[test]
    fn golden_root_state() {
        let x0 = (5f64.sqrt() - 1.0) / 2.0;
        let s = riccati_state(&diag_real(&[x0]), &ComplexVector::from_vec(vec![c(1.0, 0.0)]), Branch::Graph).unwrap();
        // A = 1 / (1 + x^2); off-diagonal A x = 1/sqrt(5) for the golden root.
        let a = 1.0 / (1.0 + x0 * x0);
        assert!((s.rho[(0, 0)].re - a).abs() < 1e-15);
        assert!((s.rho[(0, 1)].re - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((s.rho[(0, 0)].re - 0.72361).abs() < 1e-5);
        assert!((s.rho[(1, 1)].re - 0.27639).abs() < 1e-5);
    }

    #[test]
    fn parity_state_form() {
        let p = crate::model::parity_operator(4);
        let psi = ComplexVector::from_vec(vec![c(0.5, 0.1), c(-0.3, 0.2), c(0.1, 0.0), c(0.4, -0.6)]);
        let psi = &psi / c(psi.norm(), 0.0);
        let r = expectation(&p, &psi).re;
        let s = riccati_state(&p, &psi, Branch::Graph).unwrap();
        let expected = from_real_rows(2, 2, &[0.5, 0.5 * r, 0.5 * r, 0.5]);
        assert!(approx_eq(&s.rho, &expected, 1e-15));
    }

    #[test]
    fn formula_matches_outer_product() {
        let x = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.3, 0.2), c(-1.0, 0.5), c(0.0, 0.7), c(1.2, -0.1)],
        );
        let v = ComplexVector::from_vec(vec![c(0.2, -0.4), c(0.9, 0.1)]);
        for kind in [Branch::Graph, Branch::Complement] {
            let s = riccati_state(&x, &v, kind).unwrap();
            let direct = partial_trace(&s.source.density()).unwrap();
            assert!(approx_eq(&s.rho, &direct, 1e-15), "{kind:?}");
        }
    }

    #[test]
    fn zero_vector_rejected() {
        let r = riccati_state(&identity(2), &ComplexVector::zeros(2), Branch::Graph);
        assert!(matches!(r, Err(Error::ZeroVector)));
    }

    #[test]
    fn partial_trace_examples() {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        assert!(approx_eq(&partial_trace(&m).unwrap(), &diag_real(&[2.0, 0.0]), 0.0));

        let rho = from_real_rows(2, 2, &[0.7, 0.2, 0.2, 0.3]);
        let omega = diag_real(&[0.25, 0.25, 0.5]);
        let pt = partial_trace(&rho.kronecker(&omega)).unwrap();
        assert!(approx_eq(&pt, &rho, 1e-15));

        assert!(matches!(partial_trace(&identity(3)), Err(Error::OddDimension(3))));
    }

    #[test]
    fn scalar_instance_states() {
        let h = BlockHamiltonian::new(diag_real(&[1.0]), diag_real(&[0.0]), diag_real(&[1.0]), ModelKind::Custom)
            .unwrap();
        let sol = RiccatiSolution::measure(&h, diag_real(&[(5f64.sqrt() - 1.0) / 2.0]), Method::InvariantSubspace)
            .unwrap();
        let states = all_stationary_states(&h, &sol).unwrap();
        assert_eq!(states.len(), 2);
        let e: Vec<f64> = states.iter().map(|s| s.eigenvalue.unwrap()).collect();
        assert!((e[0] - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((e[1] - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn density_check() {
        assert!(is_density_matrix(&diag_real(&[1.0, 0.0]), 1e-12));
        assert!(!is_density_matrix(&diag_real(&[1.1, -0.1]), 1e-12));
        assert!(!is_density_matrix(&diag_real(&[0.6, 0.6]), 1e-12));
    }
}
