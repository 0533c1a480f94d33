//! Forward (mass-propagation) expected-runtime evaluator.
//!
//! Operationally motivated counterpart of the backward evaluator: it pushes
//! the subnormalized state forward through the program, accumulating
//! `cost(step) · (trace mass reaching that step)`, and finally adds the
//! continuation's value on the accumulated output state. Loops iterate the
//! one-step unfolding, draining exit mass into the output until the live
//! trace falls below the threshold or the iteration cap hits.

use super::{CostModel, ErtError, ErtOptions, LoopUnroll, RuntimeExpr};
use crate::frontend::{ElaboratedProgram, Ir};
use crate::operators::Pdm;
use std::collections::BTreeMap;

/// Value and residual report of one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardValue {
    pub value: f64,
    pub converged: bool,
    pub lower_bound: bool,
    /// Total live mass abandoned in truncated loops.
    pub residual_mass: f64,
    /// Final (accumulated) program output state.
    pub output: Pdm,
    pub loops: Vec<LoopUnroll>,
}

struct Ctx<'a> {
    cost: &'a CostModel,
    opts: &'a ErtOptions,
    loops: BTreeMap<usize, LoopUnroll>,
    lower_bound: bool,
    residual: f64,
}

/// `ert[S](t)(ρ)` evaluated by forward propagation.
pub fn ert_forward(
    program: &ElaboratedProgram,
    rho: &Pdm,
    t: &RuntimeExpr,
    cost: &CostModel,
    opts: &ErtOptions,
) -> Result<ForwardValue, ErtError> {
    if rho.layout() != &program.layout {
        return Err(ErtError::LayoutMismatch);
    }
    cost.check_program(&program.ir)?;
    ert_forward_ir(&program.ir, rho, t, cost, opts)
}

pub fn ert_forward_ir(
    ir: &Ir,
    rho: &Pdm,
    t: &RuntimeExpr,
    cost: &CostModel,
    opts: &ErtOptions,
) -> Result<ForwardValue, ErtError> {
    let mut ctx = Ctx {
        cost,
        opts,
        loops: BTreeMap::new(),
        lower_bound: false,
        residual: 0.0,
    };
    let (steps_cost, output) = walk(ir, rho, &mut ctx)?;
    let value = steps_cost + t.evaluate_weighted(&output);
    Ok(ForwardValue {
        value,
        converged: !ctx.lower_bound,
        lower_bound: ctx.lower_bound,
        residual_mass: ctx.residual,
        output,
        loops: ctx.loops.into_values().collect(),
    })
}

fn walk(ir: &Ir, sigma: &Pdm, ctx: &mut Ctx<'_>) -> Result<(f64, Pdm), ErtError> {
    match ir {
        Ir::Skip => Ok((ctx.cost.skip * sigma.trace(), sigma.clone())),
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
            Ok((cost, state))
        }
        Ir::Unitary(op) => Ok((
            ctx.cost.unitary_cost(op.label())? * sigma.trace(),
            op.apply(sigma),
        )),
        Ir::Seq(items) => {
            let mut state = sigma.clone();
            let mut cost = 0.0;
            for item in items {
                let (c, next) = walk(item, &state, ctx)?;
                cost += c;
                state = next;
            }
            Ok((cost, state))
        }
        Ir::Case { mset, branches } => {
            let mut cost = ctx.cost.measurement_cost(mset.label())? * sigma.trace();
            let mut out = Pdm::zero(sigma.layout().clone());
            for (id, body) in branches {
                let post = mset.post_unnormalized(sigma, *id)?;
                if post.trace() <= 0.0 {
                    continue;
                }
                let (c, image) = walk(body, &post, ctx)?;
                cost += c;
                out.add_assign(&image);
            }
            Ok((cost, out))
        }
        Ir::While {
            mset,
            body,
            loop_id,
        } => {
            let guard = ctx.cost.measurement_cost(mset.label())?;
            let mut cost = 0.0f64;
            let mut out = Pdm::zero(sigma.layout().clone());
            let mut live = sigma.clone();
            let mut unrolls = 0usize;
            let mut last_increment;
            let capped = loop {
                let mut increment = guard * live.trace();
                let exit = mset.post_unnormalized(&live, 0)?;
                out.add_assign(&exit);
                let cont = mset.post_unnormalized(&live, 1)?;
                let (body_cost, next) = walk(body, &cont, ctx)?;
                increment += body_cost;
                cost += increment;
                last_increment = increment;
                live = next;
                unrolls += 1;
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
            ctx.residual += live.trace();
            let entry = ctx.loops.entry(*loop_id).or_insert(LoopUnroll {
                loop_id: *loop_id,
                unrolls: 0,
                last_increment: 0.0,
                capped: false,
            });
            entry.unrolls += unrolls;
            entry.last_increment = entry.last_increment.max(last_increment);
            entry.capped |= capped;
            Ok((cost, out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ert::backward::ert_backward;
    use crate::frontend::{elaborate, parse};
    use crate::tolerances::Tolerances;

    fn program(src: &str) -> ElaboratedProgram {
        elaborate(&parse(src).unwrap(), &Tolerances::default()).unwrap()
    }

    #[test]
    fn skip_scales_with_input_mass() {
        let p = program("var q : bool; skip");
        let rho = Pdm::all_zero(p.layout.clone());
        let full = ert_forward(
            &p,
            &rho,
            &RuntimeExpr::zero(),
            &CostModel::unit(),
            &ErtOptions::default(),
        )
        .unwrap();
        assert!((full.value - 1.0).abs() < 1e-12);
        let half = ert_forward(
            &p,
            &rho.scaled(0.5),
            &RuntimeExpr::zero(),
            &CostModel::unit(),
            &ErtOptions::default(),
        )
        .unwrap();
        assert!((half.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_backward_on_geometric_loop() {
        let p = program(
            "var q : bool; q := |0>; [q] *= H; \
             while M_std[q] = 1 do q := |0>; [q] *= H od",
        );
        let rho = Pdm::all_zero(p.layout.clone());
        let cost = CostModel::unit();
        let opts = ErtOptions::default();
        let f = ert_forward(&p, &rho, &RuntimeExpr::zero(), &cost, &opts).unwrap();
        let b = ert_backward(&p, &RuntimeExpr::zero(), &rho, &cost, &opts).unwrap();
        assert!((f.value - 6.0).abs() < 1e-8);
        assert!((f.value - b.value).abs() < 1e-9);
        assert!(f.converged);
    }

    #[test]
    fn diverging_loop_grows_with_cap() {
        let src = "var q : bool; \
                   define M_triv := measurement { 0: [[[0,0],[0,0]],[[0,0],[0,0]]], \
                                                  1: [[[1,0],[0,0]],[[0,0],[1,0]]] } on 2; \
                   while M_triv[q] = 1 do skip od";
        let p = program(src);
        let rho = Pdm::all_zero(p.layout.clone());
        for cap in [50usize, 100] {
            let opts = ErtOptions {
                max_unroll: cap,
                ..Default::default()
            };
            let f = ert_forward(&p, &rho, &RuntimeExpr::zero(), &CostModel::unit(), &opts)
                .unwrap();
            assert!(f.lower_bound);
            assert!((f.value - 2.0 * cap as f64).abs() < 1e-9);
            assert!((f.residual_mass - 1.0).abs() < 1e-9);
        }
    }
}
