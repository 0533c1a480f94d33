//! Invariant-based upper-bound certification for loop runtimes.
//!
//! If `Φ(I) ⪯ I` pointwise on partial density matrices, then the loop's
//! runtime is bounded by `I` (Park's theorem). With affine `I` the exact
//! checker decides the operator inequality algebraically: writing
//! `I - Φ(I) = Δc + tr(ΔA·ρ)`, the inequality holds on every PSD `ρ` with
//! `tr ρ ≤ 1` iff `Δc ≥ 0` and `λ_min(ΔA) ≥ -Δc`. A violation yields an
//! explicit witness state (an eigenvector of `ΔA`, or the zero state when
//! the constant part alone fails).

use super::affine::{char_fun_apply, AffineForm};
use super::battery::{state_battery, BatteryOptions};
use super::{backward::ert_backward_ir, CostModel, ErtError, ErtOptions, RuntimeExpr};
use crate::frontend::Ir;
use crate::operators::{hermitian_eigen, Layout, MeasurementSet, Pdm};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InvariantStatus {
    Verified,
    Refuted,
    Unknown,
}

/// Outcome of an invariant check.
#[derive(Debug, Clone)]
pub struct InvariantVerdict {
    pub status: InvariantStatus,
    /// Minimum of `I(ρ) - Φ(I)(ρ)` over the checked domain: the full PSD
    /// trace-≤1 cone in exact mode, the state battery in sample mode.
    pub margin: f64,
    /// A violating state when refuted.
    pub witness: Option<Pdm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Algebraic decision; requires a loop-free body and affine `I`.
    Exact,
    /// Battery evaluation; can refute but never verify.
    Sample,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub tolerance: f64,
    pub ert: ErtOptions,
    pub battery: BatteryOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            ert: ErtOptions::default(),
            battery: BatteryOptions::default(),
        }
    }
}

/// Checks `Φ(I) ⪯ I` for the loop `while (𝔐 = 1) do body od` with
/// continuation `t`.
#[allow(clippy::too_many_arguments)]
pub fn check_invariant(
    mset: &MeasurementSet,
    body: &Ir,
    t: &RuntimeExpr,
    inv: &RuntimeExpr,
    mode: CheckMode,
    cost: &CostModel,
    layout: &Arc<Layout>,
    opts: &CheckOptions,
) -> Result<InvariantVerdict, ErtError> {
    match mode {
        CheckMode::Exact => check_exact(mset, body, t, inv, cost, layout, opts),
        CheckMode::Sample => check_sample(mset, body, t, inv, cost, layout, opts),
    }
}

fn check_exact(
    mset: &MeasurementSet,
    body: &Ir,
    t: &RuntimeExpr,
    inv: &RuntimeExpr,
    cost: &CostModel,
    layout: &Arc<Layout>,
    opts: &CheckOptions,
) -> Result<InvariantVerdict, ErtError> {
    let phi = char_fun_apply(mset, body, t, inv, cost, layout)?;
    let i_form = AffineForm::of(inv, layout);
    let phi_form = AffineForm::of(&phi, layout);
    let delta_c = i_form.constant - phi_form.constant;
    let delta_a = &i_form.matrix - &phi_form.matrix;

    let (values, vectors) = hermitian_eigen(&delta_a, 1e-6).map_err(ErtError::Operator)?;
    let lambda_min = values[0];
    let margin = delta_c + lambda_min.min(0.0);

    if margin >= -opts.tolerance {
        return Ok(InvariantVerdict {
            status: InvariantStatus::Verified,
            margin,
            witness: None,
        });
    }
    // Violated: the minimizer over {PSD, tr <= 1} is the eigenprojector at
    // lambda_min when it is negative, else the zero state.
    let witness = if lambda_min < 0.0 {
        let v = vectors.column(0).into_owned();
        Pdm::from_pure(layout.clone(), &v).map_err(ErtError::Operator)?
    } else {
        Pdm::zero(layout.clone())
    };
    Ok(InvariantVerdict {
        status: InvariantStatus::Refuted,
        margin,
        witness: Some(witness),
    })
}

fn check_sample(
    mset: &MeasurementSet,
    body: &Ir,
    t: &RuntimeExpr,
    inv: &RuntimeExpr,
    cost: &CostModel,
    layout: &Arc<Layout>,
    opts: &CheckOptions,
) -> Result<InvariantVerdict, ErtError> {
    let battery = state_battery(layout, &opts.battery);
    let mut margin = f64::INFINITY;
    let mut witness: Option<Pdm> = None;
    for rho in &battery {
        // Φ(I)(ρ) = T⟨𝔐⟩ + ert[body](I) on the continue branch + t on exit.
        let guard = cost.measurement_cost(mset.label())?;
        let cont_state = mset.post_unnormalized(rho, 1)?;
        let exit_state = mset.post_unnormalized(rho, 0)?;
        let body_val = if cont_state.trace() > 0.0 {
            ert_backward_ir(body, inv, &cont_state, cost, &opts.ert)?.value
        } else {
            0.0
        };
        let phi_val = guard + body_val + t.evaluate_weighted(&exit_state);
        let gap = inv.evaluate(rho) - phi_val;
        if gap < margin {
            margin = gap;
            if gap < -opts.tolerance {
                witness = Some(rho.clone());
            }
        }
    }
    if let Some(w) = witness {
        Ok(InvariantVerdict {
            status: InvariantStatus::Refuted,
            margin,
            witness: Some(w),
        })
    } else {
        // Sampling cannot prove the inequality on the whole cone.
        Ok(InvariantVerdict {
            status: InvariantStatus::Unknown,
            margin,
            witness: None,
        })
    }
}
