//! Exact affine (Heisenberg-picture) runtime propagation for loop-free code.
//!
//! An affine runtime `t(ρ) = c + tr(A·ρ)` stays affine under every loop-free
//! rule when observables are pulled back through channel adjoints:
//! `skip` adds the skip cost to `c`; a unitary adds its cost and maps
//! `A ↦ U†AU`; an initialization adds its cost and applies the channel
//! adjoint `A ↦ Σ_i (|i⟩⟨b|)^q A (|b⟩⟨i|)^q`; a `case` yields constant
//! `T⟨𝔐⟩` with each branch folded as `M_m†(c_m·I + A_m)M_m` — the
//! normalization condition is what lets branch constants be absorbed into
//! the observable. The result is exact: no unrolling, no tolerance.

use super::{CostModel, ErtError, RuntimeExpr};
use crate::frontend::{ElaboratedProgram, Ir};
use crate::operators::{kernel, CMatrix, Layout, MeasurementSet};
use num_complex::Complex64;
use std::sync::Arc;

/// Canonical affine form `c + tr(A·ρ)`.
#[derive(Debug, Clone)]
pub struct AffineForm {
    pub constant: f64,
    pub matrix: CMatrix,
}

impl AffineForm {
    pub fn of(t: &RuntimeExpr, layout: &Arc<Layout>) -> Self {
        let (constant, matrix) = t.canonical(layout);
        Self { constant, matrix }
    }

    pub fn into_expr(self, layout: Arc<Layout>, herm_tol: f64) -> Result<RuntimeExpr, ErtError> {
        RuntimeExpr::from_canonical(self.constant, self.matrix, layout, herm_tol)
    }

    /// `c·tr(ρ̂) + tr(A·ρ̂)` folded into one matrix: `c·I + A`.
    fn absorbed(&self) -> CMatrix {
        let d = self.matrix.nrows();
        let mut m = self.matrix.clone();
        for i in 0..d {
            m[(i, i)] += Complex64::new(self.constant, 0.0);
        }
        m
    }
}

/// Exact affine representation of `ert[S](t)` for loop-free `S`.
pub fn ert_affine(
    program: &ElaboratedProgram,
    t: &RuntimeExpr,
    cost: &CostModel,
) -> Result<RuntimeExpr, ErtError> {
    cost.check_program(&program.ir)?;
    ert_affine_ir(&program.ir, t, cost, &program.layout)
}

/// Affine representation of a loop-free IR fragment (for example a loop
/// body under scrutiny).
pub fn ert_affine_ir(
    ir: &Ir,
    t: &RuntimeExpr,
    cost: &CostModel,
    layout: &Arc<Layout>,
) -> Result<RuntimeExpr, ErtError> {
    let form = backward_form(ir, AffineForm::of(t, layout), cost, layout)?;
    form.into_expr(layout.clone(), 1e-6)
}

/// Affine pull-back of `form` through one statement (and recursively through
/// sequences). Fails on `While`.
pub(crate) fn backward_form(
    ir: &Ir,
    form: AffineForm,
    cost: &CostModel,
    layout: &Arc<Layout>,
) -> Result<AffineForm, ErtError> {
    match ir {
        Ir::Skip => Ok(AffineForm {
            constant: form.constant + cost.skip,
            matrix: form.matrix,
        }),
        Ir::InitKet { steps, label } => {
            let mut matrix = form.matrix;
            // Adjoint of the composite channel: per-target pairs in reverse,
            // Hadamard adjoint before the initialization adjoint.
            for step in steps.iter().rev() {
                if let Some(h) = &step.hadamard {
                    matrix = h.adjoint_conjugate(&matrix);
                }
                matrix = kernel::init_adjoint(layout, step.var, step.basis, &matrix);
            }
            Ok(AffineForm {
                constant: form.constant + cost.init_cost(label)?,
                matrix,
            })
        }
        Ir::Unitary(op) => Ok(AffineForm {
            constant: form.constant + cost.unitary_cost(op.label())?,
            matrix: op.adjoint_conjugate(&form.matrix),
        }),
        Ir::Seq(items) => {
            let mut acc = form;
            for item in items.iter().rev() {
                acc = backward_form(item, acc, cost, layout)?;
            }
            Ok(acc)
        }
        Ir::Case { mset, branches } => {
            let d = layout.total_dim();
            let mut matrix = CMatrix::zeros(d, d);
            for (id, body) in branches {
                let branch = backward_form(body, form.clone(), cost, layout)?;
                matrix += mset.branch_adjoint(*id, &branch.absorbed())?;
            }
            Ok(AffineForm {
                constant: cost.measurement_cost(mset.label())?,
                matrix,
            })
        }
        Ir::While { .. } => Err(ErtError::LoopInAffine),
    }
}

/// One application of a loop's runtime characteristic function in affine
/// form: `Φ(I) = T⟨𝔐⟩ + M₁†(ert[body](I))M₁ + M₀†(t)M₀`, with branch
/// constants absorbed through the normalization condition.
///
/// `t` is the loop's continuation, `inv` the candidate invariant. The body
/// must be loop-free.
pub fn char_fun_apply(
    mset: &MeasurementSet,
    body: &Ir,
    t: &RuntimeExpr,
    inv: &RuntimeExpr,
    cost: &CostModel,
    layout: &Arc<Layout>,
) -> Result<RuntimeExpr, ErtError> {
    let body_form = backward_form(body, AffineForm::of(inv, layout), cost, layout)
        .map_err(|e| match e {
            ErtError::LoopInAffine => ErtError::NestedLoop,
            other => other,
        })?;
    let exit_form = AffineForm::of(t, layout);
    let mut matrix = mset.branch_adjoint(1, &body_form.absorbed())?;
    matrix += mset.branch_adjoint(0, &exit_form.absorbed())?;
    AffineForm {
        constant: cost.measurement_cost(mset.label())?,
        matrix,
    }
    .into_expr(layout.clone(), 1e-6)
}
