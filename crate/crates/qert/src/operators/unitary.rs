//! Unitary operators on a subset of variables.

use super::{kernel, CMatrix, Layout, OperatorError, Pdm, TargetMap};
use std::sync::Arc;

/// A labeled unitary acting on an ordered subset of the layout's variables.
#[derive(Debug, Clone)]
pub struct UnitaryOp {
    label: String,
    targets: Vec<usize>,
    matrix: CMatrix,
    map: TargetMap,
}

impl UnitaryOp {
    /// Validates dimensions and `U†U = I` (within `norm_tol`).
    pub fn new(
        label: impl Into<String>,
        layout: &Layout,
        targets: Vec<usize>,
        matrix: CMatrix,
        norm_tol: f64,
    ) -> Result<Self, OperatorError> {
        let label = label.into();
        let map = TargetMap::new(layout, &targets);
        if matrix.nrows() != map.sub_dim() || matrix.ncols() != map.sub_dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: map.sub_dim(),
                got: matrix.nrows(),
            });
        }
        let gram = matrix.adjoint() * &matrix;
        let eye = CMatrix::identity(gram.nrows(), gram.ncols());
        let defect = (&gram - &eye)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if defect > norm_tol {
            return Err(OperatorError::NotUnitary { label, defect });
        }
        Ok(Self {
            label,
            targets,
            matrix,
            map,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn map(&self) -> &TargetMap {
        &self.map
    }

    /// `U^q ρ (U^q)†`; trace is preserved.
    pub fn apply(&self, rho: &Pdm) -> Pdm {
        let out = kernel::conjugate(&self.matrix, &self.map, rho.matrix());
        Pdm::from_matrix_unchecked(rho.layout().clone(), out)
    }

    /// Heisenberg-picture adjoint action on an observable matrix: `U†AU`.
    pub fn adjoint_conjugate(&self, a: &CMatrix) -> CMatrix {
        let left = kernel::apply_matrix_left(&self.matrix.adjoint(), &self.map, a);
        kernel::apply_matrix_right(&self.matrix.adjoint(), &self.map, &left)
    }
}

/// Applies a unitary to a state: `U^q ρ (U^q)†`.
pub fn apply_unitary(rho: &Pdm, u: &UnitaryOp) -> Pdm {
    u.apply(rho)
}

/// The initialization statement's channel on variable `q`:
/// `ρ[q := |b⟩] = Σ_i (|b⟩⟨i|)^q ρ (|i⟩⟨b|)^q`.
pub fn init_variable(
    rho: &Pdm,
    layout: &Arc<Layout>,
    var: usize,
    basis: usize,
) -> Result<Pdm, OperatorError> {
    if basis >= layout.dim_of(var) {
        return Err(OperatorError::BasisOutOfRange {
            var: layout.name_of(var).to_string(),
            index: basis,
            dim: layout.dim_of(var),
        });
    }
    let out = kernel::init_channel(layout, var, basis, rho.matrix());
    Ok(Pdm::from_matrix_unchecked(rho.layout().clone(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit() -> Arc<Layout> {
        Arc::new(Layout::new(vec![("q", 2)]).unwrap())
    }

    fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
    }

    #[test]
    fn rejects_non_unitary() {
        let l = qubit();
        let m = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(
            UnitaryOp::new("P", &l, vec![0], m, 1e-8),
            Err(OperatorError::NotUnitary { .. })
        ));
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let l = qubit();
        let u = UnitaryOp::new("I", &l, vec![0], CMatrix::identity(2, 2), 1e-8).unwrap();
        let rho = Pdm::basis_state(l, &[1]).unwrap();
        let out = u.apply(&rho);
        assert!((out.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn x_flips_a_bit() {
        let l = qubit();
        let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let u = UnitaryOp::new("X", &l, vec![0], x, 1e-8).unwrap();
        let rho = Pdm::basis_state(l.clone(), &[0]).unwrap();
        let out = u.apply(&rho);
        let expect = Pdm::basis_state(l, &[1]).unwrap();
        assert!((out.matrix() - expect.matrix())
            .iter()
            .all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn hadamard_makes_plus_state() {
        // H|0><0|H† = |+><+|, entrywise 0.25... no: all entries 1/2.
        let l = qubit();
        let u = UnitaryOp::new("H", &l, vec![0], hadamard(), 1e-8).unwrap();
        let rho = Pdm::basis_state(l, &[0]).unwrap();
        let out = u.apply(&rho);
        for i in 0..2 {
            for j in 0..2 {
                assert!((out.matrix()[(i, j)] - c(0.5, 0.)).norm() < 1e-12);
            }
        }
        assert!((out.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn init_resets_and_preserves_trace() {
        let l = qubit();
        let rho = Pdm::basis_state(l.clone(), &[1]).unwrap();
        let out = init_variable(&rho, &l, 0, 0).unwrap();
        let expect = Pdm::basis_state(l, &[0]).unwrap();
        assert!((out.matrix() - expect.matrix())
            .iter()
            .all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn init_is_idempotent_on_product_states() {
        let l = Arc::new(Layout::new(vec![("q", 2), ("r", 2)]).unwrap());
        // |0><0| ⊗ σ with σ = |1><1| stays fixed when re-initializing q to 0.
        let rho = Pdm::basis_state(l.clone(), &[0, 1]).unwrap();
        let out = init_variable(&rho, &l, 0, 0).unwrap();
        assert!((out.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn init_rejects_out_of_range_basis() {
        let l = qubit();
        let rho = Pdm::all_zero(l.clone());
        assert!(matches!(
            init_variable(&rho, &l, 0, 2),
            Err(OperatorError::BasisOutOfRange { .. })
        ));
    }

    #[test]
    fn init_preserves_other_marginals() {
        // Random two-qubit state: tracing out q commutes with initializing q.
        let l = Arc::new(Layout::new(vec![("q", 2), ("r", 2)]).unwrap());
        let mut rng = crate::rng::SplitMix64::new(77);
        let g = CMatrix::from_fn(4, 4, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let psd = &g * g.adjoint();
        let tr = psd.trace().re;
        let rho = Pdm::from_matrix_unchecked(l.clone(), psd.scale(1.0 / tr));
        let out = init_variable(&rho, &l, 0, 0).unwrap();
        let before = kernel::marginal_of_var(&l, 1, rho.matrix());
        let after = kernel::marginal_of_var(&l, 1, out.matrix());
        assert!((before - after).iter().all(|z| z.norm() < 1e-10));
        assert!((out.trace() - rho.trace()).abs() < 1e-12);
    }
}
