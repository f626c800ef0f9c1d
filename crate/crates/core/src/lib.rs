//! Stationary states of a qubit coupled to a finite-dimensional environment,
//! obtained from bounded solutions of the operator Riccati equation attached
//! to the block form `[[H+, V], [V^dagger, H-]]` of the total Hamiltonian.
//!
//! Pipeline: [`model`] builds the blocks, [`riccati`] solves for `X`,
//! [`stationary`] extracts the qubit states and [`verify`] certifies them by
//! direct time evolution of the full system.

pub mod error;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod riccati;
pub mod stationary;
pub mod verify;
pub mod wire;

pub use error::{Error, Result};
pub use model::{BlockHamiltonian, ModelKind};
pub use numerics::{ComplexMatrix, ComplexVector, C64};
pub use riccati::{Method, RiccatiSolution, SolverTolerances, Strategy};
pub use stationary::{Branch, GraphVector, RiccatiState};
pub use verify::VerificationReport;
