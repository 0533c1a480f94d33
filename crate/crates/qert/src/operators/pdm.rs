//! Partial density matrices.

use super::{eigen, CMatrix, CVector, Layout, OperatorError};
use crate::tolerances::Tolerances;
use num_complex::Complex64;
use std::sync::Arc;

/// A partial density matrix: positive semidefinite with trace at most 1.
///
/// Sub-unit trace encodes the probability mass of executions that have not
/// (yet) reached this point; the engines keep states unnormalized throughout
/// so that zero-probability branches never require a division.
#[derive(Debug, Clone)]
pub struct Pdm {
    matrix: CMatrix,
    layout: Arc<Layout>,
}

impl Pdm {
    /// The zero state (trace 0).
    pub fn zero(layout: Arc<Layout>) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: CMatrix::zeros(d, d),
            layout,
        }
    }

    /// Pure basis state `|digits⟩⟨digits|`, one digit per variable.
    pub fn basis_state(layout: Arc<Layout>, digits: &[usize]) -> Result<Self, OperatorError> {
        let idx = layout.pack(digits)?;
        let d = layout.total_dim();
        let mut m = CMatrix::zeros(d, d);
        m[(idx, idx)] = Complex64::new(1.0, 0.0);
        Ok(Self { matrix: m, layout })
    }

    /// All-variables-at-basis-0 state.
    pub fn all_zero(layout: Arc<Layout>) -> Self {
        let digits = vec![0; layout.var_count()];
        Self::basis_state(layout, &digits).expect("zero digits are always in range")
    }

    /// `|ψ⟩⟨ψ|` for a state vector.
    pub fn from_pure(layout: Arc<Layout>, psi: &CVector) -> Result<Self, OperatorError> {
        if psi.len() != layout.total_dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: layout.total_dim(),
                got: psi.len(),
            });
        }
        let m = psi * psi.adjoint();
        Ok(Self { matrix: m, layout })
    }

    /// Wraps a raw matrix without validation.
    pub fn from_matrix_unchecked(layout: Arc<Layout>, matrix: CMatrix) -> Self {
        Self { matrix, layout }
    }

    /// Wraps and validates a raw matrix.
    pub fn from_matrix(
        layout: Arc<Layout>,
        matrix: CMatrix,
        tol: &Tolerances,
    ) -> Result<Self, OperatorError> {
        if matrix.nrows() != layout.total_dim() || matrix.ncols() != layout.total_dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: layout.total_dim(),
                got: matrix.nrows(),
            });
        }
        let pdm = Self { matrix, layout };
        pdm.validate(tol)?;
        Ok(pdm)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Checks Hermiticity, eigenvalue floor and the trace window.
    pub fn validate(&self, tol: &Tolerances) -> Result<(), OperatorError> {
        let defect = eigen::hermitian_defect(&self.matrix);
        if defect > tol.herm {
            return Err(OperatorError::InvalidState(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = self.matrix.trace();
        if tr.im.abs() > tol.herm {
            return Err(OperatorError::InvalidState(format!(
                "trace has imaginary part {:.3e}",
                tr.im
            )));
        }
        if tr.re < -tol.tr || tr.re > 1.0 + tol.tr {
            return Err(OperatorError::InvalidState(format!(
                "trace {} outside [0, 1]",
                tr.re
            )));
        }
        let min = eigen::min_eigenvalue_of(&self.matrix, tol.herm)?;
        if min < -tol.psd {
            return Err(OperatorError::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// `self + other`, entrywise; layouts must match.
    pub fn add(&self, other: &Pdm) -> Result<Pdm, OperatorError> {
        self.check_same_layout(other)?;
        Ok(Pdm {
            matrix: &self.matrix + &other.matrix,
            layout: self.layout.clone(),
        })
    }

    pub fn add_assign(&mut self, other: &Pdm) {
        self.matrix += &other.matrix;
    }

    /// `factor * self`.
    pub fn scaled(&self, factor: f64) -> Pdm {
        Pdm {
            matrix: self.matrix.scale(factor),
            layout: self.layout.clone(),
        }
    }

    /// Spectral decomposition into `(probability, eigenvector)` pairs with
    /// probability above `cutoff`. Probabilities are clamped at zero.
    pub fn spectral_decomposition(
        &self,
        cutoff: f64,
    ) -> Result<Vec<(f64, CVector)>, OperatorError> {
        let (values, vectors) = eigen::hermitian_eigen(&self.matrix, 1e-6)?;
        let mut parts = Vec::new();
        for i in 0..values.len() {
            let p = values[i].max(0.0);
            if p > cutoff {
                parts.push((p, vectors.column(i).into_owned()));
            }
        }
        Ok(parts)
    }

    pub fn check_same_layout(&self, other: &Pdm) -> Result<(), OperatorError> {
        if self.layout != other.layout {
            return Err(OperatorError::LayoutMismatch(
                "states live on different layouts".into(),
            ));
        }
        Ok(())
    }
}
