//! Block-operator-matrix Hamiltonians `[[H+, V], [V^dagger, H-]]` on
//! `C^2 ⊗ C^N`, and builders for the standard qubit–environment models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    block2, c, check_hermitian, diag_real, frobenius, identity, kron, ComplexMatrix, C64,
    TOL_HERM,
};

/// Which construction produced a [`BlockHamiltonian`]. Analytic solvers key
/// off this tag.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Custom,
    SpinBoson { alpha: f64, beta: f64 },
    Commuting { alpha: f64 },
    /// `H+ = H- = H0` and `V = V^dagger`.
    EqualDiagonal,
}

#[derive(Debug, Clone)]
pub struct BlockHamiltonian {
    pub n_env: usize,
    pub h_plus: ComplexMatrix,
    pub h_minus: ComplexMatrix,
    pub v: ComplexMatrix,
    pub kind: ModelKind,
}

impl BlockHamiltonian {
    /// Validates shapes and Hermiticity of the diagonal blocks.
    pub fn new(
        h_plus: ComplexMatrix,
        h_minus: ComplexMatrix,
        v: ComplexMatrix,
        kind: ModelKind,
    ) -> Result<Self> {
        let n = h_plus.nrows();
        for (name, m) in [("h_plus", &h_plus), ("h_minus", &h_minus), ("v", &v)] {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if n == 0 {
            return Err(Error::DimensionMismatch("environment dimension is zero".into()));
        }
        check_hermitian(&h_plus, TOL_HERM)?;
        check_hermitian(&h_minus, TOL_HERM)?;
        Ok(Self { n_env: n, h_plus, h_minus, v, kind })
    }

    /// The full `2N x 2N` Hamiltonian.
    pub fn full(&self) -> ComplexMatrix {
        block2(&self.h_plus, &self.v, &self.v.adjoint(), &self.h_minus)
    }

    pub fn full_norm(&self) -> f64 {
        frobenius(&self.full())
    }

    pub fn is_decoupled(&self) -> bool {
        self.v.iter().all(|z| *z == C64::new(0.0, 0.0))
    }
}

/// Builds the block form of `h_q ⊗ I + I ⊗ h_env + sum_i A_i ⊗ B_i`.
pub fn from_system_terms(
    h_q: &ComplexMatrix,
    h_env: &ComplexMatrix,
    couplings: &[(ComplexMatrix, ComplexMatrix)],
) -> Result<BlockHamiltonian> {
    if h_q.shape() != (2, 2) {
        return Err(Error::DimensionMismatch(format!(
            "qubit Hamiltonian is {}x{}, expected 2x2",
            h_q.nrows(),
            h_q.ncols()
        )));
    }
    let n = h_env.nrows();
    if h_env.shape() != (n, n) || n == 0 {
        return Err(Error::DimensionMismatch("environment Hamiltonian must be square and nonempty".into()));
    }
    for (k, (a, b)) in couplings.iter().enumerate() {
        if a.shape() != (2, 2) || b.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "coupling {k}: qubit factor {:?}, environment factor {:?}",
                a.shape(),
                b.shape()
            )));
        }
    }

    let total = assemble_kronecker(h_q, h_env, couplings);
    check_hermitian(&total, TOL_HERM)?;

    let eye = identity(n);
    let block = |r: usize, s: usize| -> ComplexMatrix {
        let mut m = &eye * h_q[(r, s)];
        if r == s {
            m += h_env;
        }
        for (a, b) in couplings {
            m += b * a[(r, s)];
        }
        m
    };
    let h_plus = block(0, 0);
    let v = block(0, 1);
    let h_minus = block(1, 1);
    BlockHamiltonian::new(h_plus, h_minus, v, ModelKind::Custom)
}

/// Direct Kronecker-sum assembly of the total operator.
pub fn assemble_kronecker(
    h_q: &ComplexMatrix,
    h_env: &ComplexMatrix,
    couplings: &[(ComplexMatrix, ComplexMatrix)],
) -> ComplexMatrix {
    let n = h_env.nrows();
    let mut total = kron(h_q, &identity(n)) + kron(&identity(2), h_env);
    for (a, b) in couplings {
        total += kron(a, b);
    }
    total
}

/// Truncated single-mode bosonic operators in the Fock basis `|0>..|N-1>`.
#[derive(Debug, Clone)]
pub struct EnvOperatorSet {
    pub a: ComplexMatrix,
    pub a_dag: ComplexMatrix,
    /// `omega a^dagger a`.
    pub h_env: ComplexMatrix,
    pub parity: ComplexMatrix,
}

impl EnvOperatorSet {
    /// Fock components with `n >= N` are dropped without renormalisation, so
    /// `[a, a^dagger]` equals `I` except at the last diagonal entry (`1 - N`).
    pub fn new(n: usize, omega: f64) -> Self {
        let a = annihilation(n);
        let a_dag = a.adjoint();
        let h_env = diag_real(&(0..n).map(|k| omega * k as f64).collect::<Vec<_>>());
        Self { a, a_dag, h_env, parity: parity_operator(n) }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `[a, a^dagger]`.
    pub fn commutator(&self) -> ComplexMatrix {
        &self.a * &self.a_dag - &self.a_dag * &self.a
    }
}

pub fn annihilation(n: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
    }
    a
}

/// `diag(1, -1, 1, ...)`.
pub fn parity_operator(n: usize) -> ComplexMatrix {
    diag_real(&(0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinBosonParams {
    pub n_env: usize,
    pub omega: f64,
    /// Complex coupling `g`, serialised as `[re, im]`.
    #[serde(with = "crate::wire::complex")]
    pub g: C64,
    pub alpha: f64,
    pub beta: f64,
}

impl SpinBosonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {}", self.omega)));
        }
        if self.n_env < 2 {
            return Err(Error::InvalidParameter(format!("n_env must be at least 2, got {}", self.n_env)));
        }
        if !(self.g.re.is_finite() && self.g.im.is_finite() && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coupling".into()));
        }
        Ok(())
    }
}

/// Spin-boson model `alpha sigma_x + beta sigma_z + omega a^dagger a + sigma_z (g* a + g a^dagger)`,
/// giving `H± = omega a^dagger a ± (g* a + g a^dagger) ± beta` and `V = alpha I`.
pub fn build_spin_boson(p: &SpinBosonParams) -> Result<(BlockHamiltonian, EnvOperatorSet)> {
    p.validate()?;
    let ops = EnvOperatorSet::new(p.n_env, p.omega);
    let coupling = &ops.a * p.g.conj() + &ops.a_dag * p.g;
    let shift = identity(p.n_env) * c(p.beta, 0.0);
    let h_plus = &ops.h_env + &coupling + &shift;
    let h_minus = &ops.h_env - &coupling - &shift;
    let v = identity(p.n_env) * c(p.alpha, 0.0);
    let h = BlockHamiltonian::new(
        h_plus,
        h_minus,
        v,
        ModelKind::SpinBoson { alpha: p.alpha, beta: p.beta },
    )?;
    Ok((h, ops))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutingParams {
    /// Spectrum of `H0`.
    pub lambdas: Vec<f64>,
    /// Spectrum of `H1`; must be non-degenerate.
    pub xis: Vec<f64>,
    pub alpha: f64,
    /// Shared eigenbasis of `H0` and `H1`; identity when absent.
    pub basis_rotation: Option<ComplexMatrix>,
}

impl CommutingParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be nonzero, got {}", self.alpha)));
        }
        let n = self.xis.len();
        if n == 0 || self.lambdas.len() != n {
            return Err(Error::InvalidParameter(format!(
                "spectra must be nonempty and of equal length (lambdas {}, xis {})",
                self.lambdas.len(),
                n
            )));
        }
        if self.lambdas.iter().chain(&self.xis).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite spectrum entry".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.xis[i] == self.xis[j] {
                    return Err(Error::DegenerateSpectrum { i, j });
                }
            }
        }
        if let Some(r) = &self.basis_rotation {
            if r.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "basis rotation is {}x{}, expected {n}x{n}",
                    r.nrows(),
                    r.ncols()
                )));
            }
            if frobenius(&(r.adjoint() * r - identity(n))) > 1e-10 * n as f64 {
                return Err(Error::InvalidParameter("basis rotation is not unitary".into()));
            }
        }
        Ok(())
    }
}

/// `alpha sigma_x ⊗ I + I ⊗ H0 + sigma_z ⊗ H1` with commuting `H0`, `H1`:
/// `H± = R (D0 ± D1) R^dagger`, `V = alpha I`.
pub fn build_commuting(p: &CommutingParams) -> Result<BlockHamiltonian> {
    p.validate()?;
    let d0 = diag_real(&p.lambdas);
    let d1 = diag_real(&p.xis);
    let rotate = |m: ComplexMatrix| match &p.basis_rotation {
        Some(r) => r * m * r.adjoint(),
        None => m,
    };
    let h_plus = rotate(&d0 + &d1);
    let h_minus = rotate(&d0 - &d1);
    let v = identity(p.xis.len()) * c(p.alpha, 0.0);
    BlockHamiltonian::new(h_plus, h_minus, v, ModelKind::Commuting { alpha: p.alpha })
}

/// `H+ = H- = h0` with Hermitian coupling `v`.
pub fn build_equal_diagonal(h0: &ComplexMatrix, v: &ComplexMatrix) -> Result<BlockHamiltonian> {
    check_hermitian(v, TOL_HERM)?;
    BlockHamiltonian::new(h0.clone(), h0.clone(), v.clone(), ModelKind::EqualDiagonal)
}
