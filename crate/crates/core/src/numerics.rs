//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. All routines are
//! pure and deterministic for identical input bits.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Relative Hermiticity tolerance used when none is supplied.
pub const TOL_HERM: f64 = 1e-10;
/// Per-dimension eigendecomposition tolerance: `tol_eig = TOL_EIG_PER_DIM * dim`.
pub const TOL_EIG_PER_DIM: f64 = 1e-11;
pub const TOL_SOLVE: f64 = 1e-10;
/// Eigenvalues closer than `TOL_CLUSTER * ||A||` are grouped into one cluster.
pub const TOL_CLUSTER: f64 = 1e-9;
/// Default singularity floor for [`solve_linear`], relative to `||A||_2`.
pub const KAPPA_FLOOR: f64 = 1e-12;
/// Default Sylvester spectral gap, relative to `||A||_F + ||B||_F`.
pub const GAP_MIN_REL: f64 = 1e-10;

const EIG_MAX_ITER: usize = 10_000;
const PHASE_EPS: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn diag_real(d: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        d.len(),
        d.iter().map(|&x| c(x, 0.0)),
    ))
}

/// Builds a matrix from row-major real entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    assert_eq!(rows * cols, data.len());
    ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &ComplexVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Elementwise comparison with an explicit absolute tolerance.
pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
}

/// `||A - A^dagger||_F / ||A||_F`, zero for the zero matrix.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    let norm = frobenius(a);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius(&(a - a.adjoint())) / norm
}

pub fn check_hermitian(a: &ComplexMatrix, tol_herm: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = hermiticity_defect(a);
    if defect > tol_herm {
        return Err(Error::NotHermitian { defect, tol: tol_herm });
    }
    Ok(())
}

/// Kronecker product `a ⊗ b` with the row index of `a` as the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Assembles `[[a, b], [c, d]]` from four equally sized square blocks.
pub fn block2(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    d: &ComplexMatrix,
) -> ComplexMatrix {
    let n = a.nrows();
    let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
    /// Index ranges of eigenvalue clusters (gap below `tol_cluster * ||A||`).
    /// Only the span of a cluster is meaningful, not its individual vectors.
    pub clusters: Vec<Range<usize>>,
}

impl HermitianEigenResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Index of the cluster containing eigenvalue `k`.
    pub fn cluster_of(&self, k: usize) -> usize {
        self.clusters
            .iter()
            .position(|r| r.contains(&k))
            .expect("every index belongs to a cluster")
    }

    pub fn has_degeneracy(&self) -> bool {
        self.clusters.iter().any(|r| r.len() > 1)
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let fk = f(lam);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= fk;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|x| c(x, 0.0))
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues and a deterministic
/// phase convention: the first component of modulus above `1e-10` of every
/// eigenvector is real and positive.
pub fn eigh(a: &ComplexMatrix, tol_herm: f64) -> Result<HermitianEigenResult> {
    eigh_with_cluster_tol(a, tol_herm, TOL_CLUSTER)
}

pub fn eigh_with_cluster_tol(
    a: &ComplexMatrix,
    tol_herm: f64,
    tol_cluster: f64,
) -> Result<HermitianEigenResult> {
    check_hermitian(a, tol_herm)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigenResult {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
            clusters: vec![],
        });
    }
    // Exact Hermitian input for the solver; the defect is already bounded.
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let decomposition = sym
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    let vals = &decomposition.eigenvalues;
    // Stable sort keeps the routine's original order for exact ties.
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = decomposition.eigenvectors.column(src).into_owned();
        let norm = vec_norm(&col);
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
        fix_phase(&mut col);
        eigenvectors.set_column(dst, &col);
    }

    let scale = eigenvalues
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let clusters = cluster_ranges(&eigenvalues, tol_cluster * scale);

    let result = HermitianEigenResult { eigenvalues, eigenvectors, clusters };

    let tol_eig = TOL_EIG_PER_DIM * n as f64;
    let a_norm = frobenius(&sym);
    let lambda = diag_real(&result.eigenvalues);
    let residual = frobenius(&(&sym * &result.eigenvectors - &result.eigenvectors * lambda));
    let orth = frobenius(&(result.eigenvectors.adjoint() * &result.eigenvectors - identity(n)));
    if residual > tol_eig * a_norm.max(f64::MIN_POSITIVE) || orth > tol_eig {
        return Err(Error::ConvergenceFailure);
    }
    Ok(result)
}

fn fix_phase(v: &mut ComplexVector) {
    if let Some(z) = v.iter().copied().find(|z| z.norm() > PHASE_EPS) {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

fn cluster_ranges(sorted: &[f64], gap: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[k - 1] > gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Solution of a dense linear system together with conditioning information.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: ComplexMatrix,
    /// `sigma_min(A) / sigma_max(A)`.
    pub rcond: f64,
}

/// Solves `A X = B` by LU with partial pivoting, rejecting numerically
/// singular `A` (`sigma_min < kappa_floor * ||A||_2`).
pub fn solve_linear(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<LinearSolution> {
    solve_linear_with_floor(a, b, KAPPA_FLOOR)
}

pub fn solve_linear_with_floor(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    kappa_floor: f64,
) -> Result<LinearSolution> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Ok(LinearSolution { x: b.clone(), rcond: 1.0 });
    }
    let (smin, smax) = singular_value_range(a);
    let floor = kappa_floor * smax;
    if smax == 0.0 || smin < floor {
        return Err(Error::SingularMatrix { sigma_min: smin, floor });
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularMatrix { sigma_min: smin, floor })?;
    Ok(LinearSolution { x, rcond: smin / smax })
}

fn singular_value_range(a: &ComplexMatrix) -> (f64, f64) {
    let sv = a.singular_values();
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (smin.max(0.0), smax)
}

/// Smallest singular value, `0` for an empty matrix.
///
/// Uses the one-sided SVD rather than `sqrt(lambda_min(A^dagger A))`, which
/// loses half the digits near the invertibility floors used downstream.
pub fn smallest_singular_value(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_value_range(a).0
}

pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_value_range(a).1
}

/// Spectral representation of `exp(-i H t)` reusable across many times.
#[derive(Debug, Clone)]
pub struct Propagator {
    eig: HermitianEigenResult,
}

impl Propagator {
    pub fn new(h: &ComplexMatrix, tol_herm: f64) -> Result<Self> {
        Ok(Self { eig: eigh(h, tol_herm)? })
    }

    pub fn from_eigen(eig: HermitianEigenResult) -> Self {
        Self { eig }
    }

    pub fn at(&self, t: f64) -> ComplexMatrix {
        self.eig.apply_function(|e| (c(0.0, -e * t)).exp())
    }

    /// `exp(-i H t) v` without forming the full unitary.
    pub fn apply(&self, t: f64, v: &ComplexVector) -> ComplexVector {
        let coeffs = self.eig.eigenvectors.adjoint() * v;
        let phased = ComplexVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(&self.eig.eigenvalues)
                .map(|(a, &e)| a * c(0.0, -e * t).exp()),
        );
        &self.eig.eigenvectors * phased
    }
}

/// `exp(-i H t)` through the spectral decomposition of `H`.
pub fn unitary_exp(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(Propagator::new(h, TOL_HERM)?.at(t))
}

/// Solves `A X - X B = C` by Bartels–Stewart on complex Schur forms.
///
/// Fails with `SpectraOverlap` when `min |alpha - beta|` over the two spectra
/// is below `gap_min` (default `1e-10 * (||A||_F + ||B||_F)`).
pub fn sylvester_solve(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c_rhs: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let gap_min = GAP_MIN_REL * (frobenius(a) + frobenius(b));
    sylvester_solve_with_gap(a, b, c_rhs, gap_min)
}

pub fn sylvester_solve_with_gap(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c_rhs: &ComplexMatrix,
    gap_min: f64,
) -> Result<ComplexMatrix> {
    let (m, n) = (a.nrows(), b.nrows());
    if !a.is_square() || !b.is_square() || c_rhs.shape() != (m, n) {
        return Err(Error::DimensionMismatch(format!(
            "sylvester: A {:?}, B {:?}, C {:?}",
            a.shape(),
            b.shape(),
            c_rhs.shape()
        )));
    }
    if m == 0 || n == 0 {
        return Ok(ComplexMatrix::zeros(m, n));
    }
    let (qa, ta) = complex_schur(a)?;
    let (qb, tb) = complex_schur(b)?;

    let gap = ta
        .diagonal()
        .iter()
        .flat_map(|&alpha| tb.diagonal().iter().map(move |&beta| (alpha - beta).norm()).collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min);
    if gap < gap_min {
        return Err(Error::SpectraOverlap { gap, gap_min });
    }

    // T_A Y - Y T_B = F, column by column since T_B is upper triangular.
    let f = qa.adjoint() * c_rhs * &qb;
    let mut y = ComplexMatrix::zeros(m, n);
    for k in 0..n {
        let mut rhs = f.column(k).into_owned();
        for j in 0..k {
            let tjk = tb[(j, k)];
            if tjk != C64::new(0.0, 0.0) {
                rhs += y.column(j) * tjk;
            }
        }
        let shift = tb[(k, k)];
        // Back substitution with (T_A - shift I), upper triangular.
        for i in (0..m).rev() {
            let mut acc = rhs[i];
            for l in i + 1..m {
                acc -= ta[(i, l)] * y[(l, k)];
            }
            y[(i, k)] = acc / (ta[(i, i)] - shift);
        }
    }
    Ok(qa * y * qb.adjoint())
}

fn complex_schur(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let schur = Schur::try_new(a.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(Error::ConvergenceFailure)?;
    let (q, mut t) = schur.unpack();
    // Clear rounding below the diagonal; the substitution assumes exact triangularity.
    for j in 0..t.ncols() {
        for i in j + 1..t.nrows() {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}
