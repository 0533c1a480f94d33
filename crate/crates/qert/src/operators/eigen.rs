//! Dense Hermitian eigendecomposition helpers.

use super::{CMatrix, OperatorError};
use nalgebra::DVector;

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
///
/// The input is validated to be Hermitian within `herm_tol` and symmetrized
/// before decomposition so that accumulated floating-point asymmetry cannot
/// poison the solver.
pub fn hermitian_eigen(
    m: &CMatrix,
    herm_tol: f64,
) -> Result<(DVector<f64>, CMatrix), OperatorError> {
    let defect = hermitian_defect(m);
    if defect > herm_tol {
        return Err(OperatorError::NotHermitian(defect));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(OperatorError::EigenFailure)?;
    // Sort ascending for deterministic output.
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n = eig.eigenvalues.len();
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_of(m: &CMatrix, herm_tol: f64) -> Result<f64, OperatorError> {
    let (values, _) = hermitian_eigen(m, herm_tol)?;
    Ok(values[0])
}

/// Max-norm of `A - A†`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}
