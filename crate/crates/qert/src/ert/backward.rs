//! Backward (continuation-passing) expected-runtime evaluator.
//!
//! Implements the runtime rules by structural recursion: `skip` adds the skip
//! cost, initialization/unitary/measurement add their labeled costs,
//! sequencing composes continuations, `case` sums branch evaluations on the
//! unnormalized post states, and `while` is evaluated at the given state by
//! Kleene unrolling `t_{n+1} = Φ(t_n)` from `t_0 = 0`, stopping when the
//! increment and the live mass both drop below `epsilon_value` or at the
//! unroll cap (in which case the value is flagged as a lower bound).
//!
//! All evaluation is mass-weighted: a branch of trace `p` contributes `p`
//! times its normalized value, which is computed without ever dividing by
//! `p`. On trace-1 inputs this is exactly the literal rule-by-rule value.

use super::{CostModel, ErtError, ErtOptions, LoopUnroll, RuntimeExpr};
use crate::frontend::{ElaboratedProgram, Ir};
use crate::operators::{MeasurementSet, Pdm};
use crate::semantics::{self, SemanticsOptions};
use std::collections::BTreeMap;

/// Value and convergence report of one backward evaluation.
#[derive(Debug, Clone)]
pub struct ErtValue {
    pub value: f64,
    pub converged: bool,
    /// True when a loop hit the unroll cap: the value only bounds the true
    /// runtime from below.
    pub lower_bound: bool,
    pub loops: Vec<LoopUnroll>,
}

/// Continuation of the program following the statement under evaluation.
enum Cont<'a> {
    /// No continuation (runtime 0).
    Zero,
    /// An affine runtime expression.
    Expr(&'a RuntimeExpr),
    /// Remaining statements of a sequence, then an outer continuation.
    Then(&'a [Ir], &'a Cont<'a>),
}

struct Ctx<'a> {
    cost: &'a CostModel,
    opts: &'a ErtOptions,
    sem_opts: SemanticsOptions,
    loops: BTreeMap<usize, LoopUnroll>,
    lower_bound: bool,
}

/// `ert[S](t)(ρ)` evaluated backwards.
pub fn ert_backward(
    program: &ElaboratedProgram,
    t: &RuntimeExpr,
    rho: &Pdm,
    cost: &CostModel,
    opts: &ErtOptions,
) -> Result<ErtValue, ErtError> {
    if rho.layout() != &program.layout {
        return Err(ErtError::LayoutMismatch);
    }
    cost.check_program(&program.ir)?;
    ert_backward_ir(&program.ir, t, rho, cost, opts)
}

/// Backward evaluation of a bare IR fragment (used for loop-only checks).
pub fn ert_backward_ir(
    ir: &Ir,
    t: &RuntimeExpr,
    rho: &Pdm,
    cost: &CostModel,
    opts: &ErtOptions,
) -> Result<ErtValue, ErtError> {
    let mut ctx = Ctx {
        cost,
        opts,
        sem_opts: SemanticsOptions {
            epsilon_mass: opts.epsilon_value,
            max_iterations: opts.max_unroll,
            validate: None,
        },
        loops: BTreeMap::new(),
        lower_bound: false,
    };
    let value = eval(ir, &Cont::Expr(t), rho, &mut ctx)?;
    Ok(ErtValue {
        value,
        converged: !ctx.lower_bound,
        lower_bound: ctx.lower_bound,
        loops: ctx.loops.into_values().collect(),
    })
}

fn eval_cont(cont: &Cont<'_>, sigma: &Pdm, ctx: &mut Ctx<'_>) -> Result<f64, ErtError> {
    match cont {
        Cont::Zero => Ok(0.0),
        Cont::Expr(t) => Ok(t.evaluate_weighted(sigma)),
        Cont::Then(rest, outer) => {
            if rest.is_empty() {
                eval_cont(outer, sigma, ctx)
            } else {
                let next = Cont::Then(&rest[1..], outer);
                eval(&rest[0], &next, sigma, ctx)
            }
        }
    }
}

fn eval(ir: &Ir, cont: &Cont<'_>, sigma: &Pdm, ctx: &mut Ctx<'_>) -> Result<f64, ErtError> {
    match ir {
        Ir::Skip => Ok(ctx.cost.skip * sigma.trace() + eval_cont(cont, sigma, ctx)?),
        Ir::InitKet { steps, label } => {
            let cost = ctx.cost.init_cost(label)? * sigma.trace();
            let mut state = sigma.clone();
            for step in steps {
                state =
                    crate::operators::init_variable(&state, sigma.layout(), step.var, step.basis)?;
                if let Some(h) = &step.hadamard {
                    state = h.apply(&state);
                }
            }
            Ok(cost + eval_cont(cont, &state, ctx)?)
        }
        Ir::Unitary(op) => {
            let cost = ctx.cost.unitary_cost(op.label())? * sigma.trace();
            let state = op.apply(sigma);
            Ok(cost + eval_cont(cont, &state, ctx)?)
        }
        Ir::Seq(items) => {
            if items.is_empty() {
                return eval_cont(cont, sigma, ctx);
            }
            let rest = Cont::Then(&items[1..], cont);
            eval(&items[0], &rest, sigma, ctx)
        }
        Ir::Case { mset, branches } => {
            let mut total = ctx.cost.measurement_cost(mset.label())? * sigma.trace();
            for (id, body) in branches {
                let post = mset.post_unnormalized(sigma, *id)?;
                if post.trace() <= 0.0 {
                    continue;
                }
                total += eval(body, cont, &post, ctx)?;
            }
            Ok(total)
        }
        Ir::While {
            mset,
            body,
            loop_id,
        } => kleene_loop(mset, body, *loop_id, cont, sigma, ctx),
    }
}

/// Kleene unrolling of a loop's runtime at a fixed state.
///
/// The n-th increment is
/// `T⟨𝔐⟩·tr(σₙ) + t(M₀σₙM₀†) + ert[body](0)(M₁σₙM₁†)`
/// with `σ₀ = σ` and `σ_{n+1} = ⟦body⟧(M₁σₙM₁†)`; partial sums are exactly
/// the iterates `Φⁿ(0)(σ)` and are nondecreasing in `n`.
fn kleene_loop(
    mset: &MeasurementSet,
    body: &Ir,
    loop_id: usize,
    cont: &Cont<'_>,
    sigma: &Pdm,
    ctx: &mut Ctx<'_>,
) -> Result<f64, ErtError> {
    let guard_cost = ctx.cost.measurement_cost(mset.label())?;
    let mut total = 0.0f64;
    let mut live = sigma.clone();
    let mut unrolls = 0usize;
    let mut last_increment;
    let capped = loop {
        let exit = mset.post_unnormalized(&live, 0)?;
        let cont_state = mset.post_unnormalized(&live, 1)?;
        let mut increment = guard_cost * live.trace();
        increment += eval_cont(cont, &exit, ctx)?;
        if cont_state.trace() > 0.0 {
            increment += eval(body, &Cont::Zero, &cont_state, ctx)?;
        }
        total += increment;
        last_increment = increment;
        unrolls += 1;

        let (next, body_converged) =
            semantics::eval_fragment(body, &cont_state, &ctx.sem_opts)?;
        if !body_converged {
            ctx.lower_bound = true;
        }
        live = next;
        if increment < ctx.opts.epsilon_value && live.trace() < ctx.opts.epsilon_value {
            break false;
        }
        if unrolls >= ctx.opts.max_unroll {
            break true;
        }
    };
    if capped {
        ctx.lower_bound = true;
    }
    let entry = ctx.loops.entry(loop_id).or_insert(LoopUnroll {
        loop_id,
        unrolls: 0,
        last_increment: 0.0,
        capped: false,
    });
    entry.unrolls += unrolls;
    entry.last_increment = entry.last_increment.max(last_increment);
    entry.capped |= capped;
    Ok(total)
}
