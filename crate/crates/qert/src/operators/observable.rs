//! Hermitian observables on the full state space.

use super::{eigen, kernel, CMatrix, Layout, OperatorError, Pdm};
use std::sync::Arc;

/// A Hermitian matrix on the full layout, used in trace expressions
/// `tr(A·ρ)` and operator inequalities.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: CMatrix,
    layout: Arc<Layout>,
    /// Structured origin when built from a subspace matrix; keeps
    /// serialization compact.
    origin: Option<(Vec<usize>, CMatrix)>,
}

impl Observable {
    /// Wraps a full-space matrix, validating Hermiticity within `herm_tol`.
    pub fn new(layout: Arc<Layout>, matrix: CMatrix, herm_tol: f64) -> Result<Self, OperatorError> {
        if matrix.nrows() != layout.total_dim() || matrix.ncols() != layout.total_dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: layout.total_dim(),
                got: matrix.nrows(),
            });
        }
        let defect = eigen::hermitian_defect(&matrix);
        if defect > herm_tol {
            return Err(OperatorError::NotHermitian(defect));
        }
        Ok(Self {
            matrix,
            layout,
            origin: None,
        })
    }

    /// Extends a Hermitian matrix on `targets` to the full space.
    pub fn from_subspace(
        layout: Arc<Layout>,
        targets: &[usize],
        sub: &CMatrix,
        herm_tol: f64,
    ) -> Result<Self, OperatorError> {
        let full = kernel::extend_to_space(sub, &layout, targets)?;
        let mut obs = Self::new(layout, full, herm_tol)?;
        obs.origin = Some((targets.to_vec(), sub.clone()));
        Ok(obs)
    }

    /// The `(targets, subspace matrix)` pair this observable was built from,
    /// when it came through [`Observable::from_subspace`].
    pub fn origin(&self) -> Option<(&[usize], &CMatrix)> {
        self.origin.as_ref().map(|(t, m)| (t.as_slice(), m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// `tr(A·ρ)` (real part; imaginary part vanishes for Hermitian pairs).
    pub fn expectation(&self, rho: &Pdm) -> f64 {
        let mut acc = 0.0;
        let n = self.matrix.nrows();
        let a = self.matrix.as_slice();
        let r = rho.matrix().as_slice();
        // tr(AB) = Σ_{i,j} A[i,j] B[j,i]
        for i in 0..n {
            for j in 0..n {
                let prod = a[i + j * n] * r[j + i * n];
                acc += prod.re;
            }
        }
        acc
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self, herm_tol: f64) -> Result<f64, OperatorError> {
        eigen::min_eigenvalue_of(&self.matrix, herm_tol)
    }
}
