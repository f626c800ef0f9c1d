use thiserror::Error;

/// Errors produced anywhere in the build → solve → states → verify pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: relative defect {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("eigendecomposition did not converge")]
    ConvergenceFailure,

    #[error("matrix is numerically singular: sigma_min {sigma_min:.3e} below floor {floor:.3e}")]
    SingularMatrix { sigma_min: f64, floor: f64 },

    #[error("Sylvester spectra overlap: separation {gap:.3e} below {gap_min:.3e}")]
    SpectraOverlap { gap: f64, gap_min: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate spectrum: xi[{i}] and xi[{j}] coincide")]
    DegenerateSpectrum { i: usize, j: usize },

    #[error("no eigenvector selection yields an invertible top block")]
    NoInvertibleSelection,

    #[error("candidate solution rejected: residual {residual:.3e} exceeds {tol:.3e}")]
    NotAccepted { residual: f64, tol: f64 },

    #[error("Newton iteration did not reach tolerance after {iterations} steps (residual {residual:.3e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("analytic solution not available: {0}")]
    WrongModel(String),

    #[error("weighted similarity is not Hermitian (defect {defect:.3e}); X is not a Riccati solution")]
    SimilarityDefect { defect: f64 },

    #[error("zero vector")]
    ZeroVector,

    #[error("matrix has odd dimension {0}; partial trace needs 2N")]
    OddDimension(usize),

    #[error("control vector is too close to an eigenvector (defect {defect:.3e})")]
    ControlTooClose { defect: f64 },

    #[error("control vector shows no dynamics (deviation {deviation:.3e}); the check has no power here")]
    ControlDegenerate { deviation: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
