//! Expected-runtime transformer: cost model, backward/forward/affine
//! evaluators, and the invariant checker.

mod affine;
mod backward;
mod battery;
mod cost;
mod expr;
mod forward;
mod invariant;

pub use affine::{char_fun_apply, ert_affine, ert_affine_ir, AffineForm};
pub use backward::{ert_backward, ert_backward_ir, ErtValue};
pub use battery::{random_mixed, random_pure, state_battery, BatteryOptions};
pub use cost::CostModel;
pub use expr::RuntimeExpr;
pub use forward::{ert_forward, ert_forward_ir, ForwardValue};
pub use invariant::{check_invariant, CheckMode, CheckOptions, InvariantStatus, InvariantVerdict};

use crate::frontend::ElaboratedProgram;
use crate::operators::{OperatorError, Pdm};
use crate::semantics::EvalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ErtError {
    #[error("state layout does not match the program layout")]
    LayoutMismatch,
    #[error("missing cost for label `{0}` and the cost model has no default")]
    MissingCost(String),
    #[error("invalid cost model: {0}")]
    BadCostModel(String),
    #[error("invalid invariant: {0}")]
    BadInvariant(String),
    #[error("the affine evaluator requires loop-free code")]
    LoopInAffine,
    #[error("trajectory sampling needs a trace-1 initial state, got trace {0}")]
    NotNormalizedState(f64),
    #[error("exact invariant checking requires a loop-free body")]
    NestedLoop,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Eval(EvalError),
}

impl From<EvalError> for ErtError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::LayoutMismatch => ErtError::LayoutMismatch,
            other => ErtError::Eval(other),
        }
    }
}

/// Options for loop unrolling in the runtime evaluators.
#[derive(Debug, Clone)]
pub struct ErtOptions {
    /// Converged when both the last increment and the live mass drop below
    /// this threshold.
    pub epsilon_value: f64,
    /// Hard cap on unrollings per loop.
    pub max_unroll: usize,
}

impl Default for ErtOptions {
    fn default() -> Self {
        Self {
            epsilon_value: 1e-10,
            max_unroll: 10_000,
        }
    }
}

/// Aggregated unrolling statistics for one loop.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LoopUnroll {
    pub loop_id: usize,
    pub unrolls: usize,
    pub last_increment: f64,
    pub capped: bool,
}

/// Combined report of both evaluators with continuation 0.
#[derive(Debug, Clone)]
pub struct ProgramRuntime {
    pub backward: ErtValue,
    pub forward: ForwardValue,
    /// `|backward - forward|`.
    pub difference: f64,
    /// Both evaluators converged.
    pub converged: bool,
}

/// The runtime of a plain program: both evaluators with the continuation set
/// to 0, plus their difference and convergence diagnostics.
pub fn ert_of_program(
    program: &ElaboratedProgram,
    rho: &Pdm,
    cost: &CostModel,
    opts: &ErtOptions,
) -> Result<ProgramRuntime, ErtError> {
    let zero = RuntimeExpr::zero();
    let backward = ert_backward(program, &zero, rho, cost, opts)?;
    let forward = ert_forward(program, rho, &zero, cost, opts)?;
    let difference = (backward.value - forward.value).abs();
    let converged = backward.converged && forward.converged;
    Ok(ProgramRuntime {
        backward,
        forward,
        difference,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{elaborate, parse};
    use crate::tolerances::Tolerances;

    #[test]
    fn wrapper_reports_both_values() {
        let p = elaborate(&parse("var q : bool; skip").unwrap(), &Tolerances::default()).unwrap();
        let rho = Pdm::all_zero(p.layout.clone());
        let r = ert_of_program(&p, &rho, &CostModel::unit(), &ErtOptions::default()).unwrap();
        assert!((r.backward.value - 1.0).abs() < 1e-12);
        assert!((r.forward.value - 1.0).abs() < 1e-12);
        assert!(r.difference < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn capped_loop_reports_disagreement_status() {
        let src = "var q : bool; \
                   define M_triv := measurement { 0: [[[0,0],[0,0]],[[0,0],[0,0]]], \
                                                  1: [[[1,0],[0,0]],[[0,0],[1,0]]] } on 2; \
                   while M_triv[q] = 1 do skip od";
        let p = elaborate(&parse(src).unwrap(), &Tolerances::default()).unwrap();
        let rho = Pdm::all_zero(p.layout.clone());
        let opts = ErtOptions {
            max_unroll: 10,
            ..Default::default()
        };
        let r = ert_of_program(&p, &rho, &CostModel::unit(), &opts).unwrap();
        assert!(!r.converged);
        assert!(r.backward.lower_bound && r.forward.lower_bound);
    }

    #[test]
    fn cost_scaling_scales_the_runtime() {
        let src = "var q : bool; q := |0>; [q] *= H; \
                   while M_std[q] = 1 do q := |0>; [q] *= H od";
        let p = elaborate(&parse(src).unwrap(), &Tolerances::default()).unwrap();
        let rho = Pdm::all_zero(p.layout.clone());
        let unit = ert_of_program(&p, &rho, &CostModel::unit(), &ErtOptions::default()).unwrap();
        let lambda = 3.5;
        let scaled = ert_of_program(
            &p,
            &rho,
            &CostModel::unit().scaled(lambda),
            &ErtOptions::default(),
        )
        .unwrap();
        assert!((scaled.backward.value - lambda * unit.backward.value).abs() < 1e-9);
        assert!((scaled.forward.value - lambda * unit.forward.value).abs() < 1e-9);
    }
}
