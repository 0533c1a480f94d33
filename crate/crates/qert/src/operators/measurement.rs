//! Measurement sets `{M_m}` with `Σ M_m†M_m = I`.

use super::{kernel, CMatrix, Layout, OperatorError, Pdm, TargetMap};

/// An indexed family of measurement operators on a variable subset.
///
/// Outcome `m` occurs with probability `tr(M_m†M_m ρ)` and leaves the
/// (unnormalized) post state `M_m ρ M_m†`.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    label: String,
    targets: Vec<usize>,
    outcomes: Vec<(u32, CMatrix)>,
    /// Precomputed `M_m†M_m` per outcome, for probability queries.
    effects: Vec<CMatrix>,
    map: TargetMap,
}

impl MeasurementSet {
    /// Validates dimensions and the normalization condition within `norm_tol`.
    pub fn new(
        label: impl Into<String>,
        layout: &Layout,
        targets: Vec<usize>,
        outcomes: Vec<(u32, CMatrix)>,
        norm_tol: f64,
    ) -> Result<Self, OperatorError> {
        let label = label.into();
        let map = TargetMap::new(layout, &targets);
        let d = map.sub_dim();
        let mut sum = CMatrix::zeros(d, d);
        let mut effects = Vec::with_capacity(outcomes.len());
        for (_, m) in &outcomes {
            if m.nrows() != d || m.ncols() != d {
                return Err(OperatorError::DimensionMismatch {
                    expected: d,
                    got: m.nrows(),
                });
            }
            let effect = m.adjoint() * m;
            sum += &effect;
            effects.push(effect);
        }
        let defect = (&sum - CMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if defect > norm_tol {
            return Err(OperatorError::NotNormalized { label, defect });
        }
        Ok(Self {
            label,
            targets,
            outcomes,
            effects,
            map,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn map(&self) -> &TargetMap {
        &self.map
    }

    pub fn outcome_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.outcomes.iter().map(|(id, _)| *id)
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn operator(&self, outcome: u32) -> Result<&CMatrix, OperatorError> {
        self.outcomes
            .iter()
            .find(|(id, _)| *id == outcome)
            .map(|(_, m)| m)
            .ok_or_else(|| OperatorError::UnknownOutcome(outcome, self.label.clone()))
    }

    fn position(&self, outcome: u32) -> Result<usize, OperatorError> {
        self.outcomes
            .iter()
            .position(|(id, _)| *id == outcome)
            .ok_or_else(|| OperatorError::UnknownOutcome(outcome, self.label.clone()))
    }

    /// `tr(M_m†M_m ρ)`, clamped at 0 against rounding.
    pub fn prob(&self, rho: &Pdm, outcome: u32) -> Result<f64, OperatorError> {
        let k = self.position(outcome)?;
        let p = kernel::expectation_on_targets(&self.effects[k], &self.map, rho.matrix()).re;
        Ok(p.max(0.0))
    }

    /// Unnormalized post-measurement state `M_m ρ M_m†`.
    ///
    /// Defined for every outcome, including probability-0 ones (where it is
    /// the zero matrix), so no division ever happens here.
    pub fn post_unnormalized(&self, rho: &Pdm, outcome: u32) -> Result<Pdm, OperatorError> {
        let k = self.position(outcome)?;
        let out = kernel::conjugate(&self.outcomes[k].1, &self.map, rho.matrix());
        Ok(Pdm::from_matrix_unchecked(rho.layout().clone(), out))
    }

    /// Heisenberg adjoint of one branch on an observable: `M_m† A M_m`.
    pub fn branch_adjoint(&self, outcome: u32, a: &CMatrix) -> Result<CMatrix, OperatorError> {
        let k = self.position(outcome)?;
        let m = &self.outcomes[k].1;
        let left = kernel::apply_matrix_left(&m.adjoint(), &self.map, a);
        Ok(kernel::apply_matrix_right(&m.adjoint(), &self.map, &left))
    }
}

/// Probability of `outcome` under measurement `mset` in state `rho`.
pub fn measure_prob(rho: &Pdm, mset: &MeasurementSet, outcome: u32) -> Result<f64, OperatorError> {
    mset.prob(rho, outcome)
}

/// Unnormalized post state `M_m ρ M_m†`.
pub fn measure_post_unnormalized(
    rho: &Pdm,
    mset: &MeasurementSet,
    outcome: u32,
) -> Result<Pdm, OperatorError> {
    mset.post_unnormalized(rho, outcome)
}
