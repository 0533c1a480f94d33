//! Finite-dimensional complex linear algebra for quantum program states:
//! tensor-product layouts, partial density matrices, measurement sets,
//! unitaries and observables, plus the handful of primitives everything else
//! is built from (canonical operator extension, measurement probability and
//! collapse, unitary conjugation, basis-ket initialization, minimum
//! eigenvalue).

mod eigen;
pub(crate) mod kernel;
mod layout;
mod measurement;
mod observable;
mod pdm;
mod unitary;

pub use eigen::{hermitian_eigen, min_eigenvalue_of};
pub use kernel::{
    apply_matrix_left, apply_matrix_right, apply_to_vector, conjugate, expectation_on_targets,
    extend_to_space, init_adjoint, init_channel, marginal_of_var, TargetMap,
};
pub use layout::Layout;
pub use measurement::{measure_post_unnormalized, measure_prob, MeasurementSet};
pub use observable::Observable;
pub use pdm::Pdm;
pub use unitary::{apply_unitary, init_variable, UnitaryOp};

use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex vector used throughout.
pub type CVector = nalgebra::DVector<Complex64>;

/// Errors from operator-level validation and application.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum OperatorError {
    /// A referenced variable is not part of the layout.
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    /// A variable name occurs twice in a layout.
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    /// A variable was declared with dimension < 2.
    #[error("variable `{0}` must have dimension >= 2, got {1}")]
    BadDimension(String, usize),
    /// An operator matrix does not match the dimension of its targets.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// `U†U = I` fails beyond tolerance; the payload is the max-norm defect.
    #[error("operator `{label}` is not unitary (max |U†U - I| = {defect:.3e})")]
    NotUnitary { label: String, defect: f64 },
    /// `Σ M†M = I` fails beyond tolerance; the payload is the max-norm defect.
    #[error("measurement `{label}` violates the normalization condition (max |ΣM†M - I| = {defect:.3e})")]
    NotNormalized { label: String, defect: f64 },
    /// A matrix expected to be Hermitian is not.
    #[error("matrix is not Hermitian (max |A - A†| = {0:.3e})")]
    NotHermitian(f64),
    /// A state failed positive-semidefiniteness or trace validation.
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// A measurement outcome id that the set does not define.
    #[error("unknown outcome {0} for measurement `{1}`")]
    UnknownOutcome(u32, String),
    /// A basis index outside a variable's dimension.
    #[error("basis index {index} out of range for variable `{var}` of dimension {dim}")]
    BasisOutOfRange { var: String, index: usize, dim: usize },
    /// The dense eigensolver did not converge.
    #[error("eigensolver failed to converge")]
    EigenFailure,
    /// Two values live on different layouts.
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
}
