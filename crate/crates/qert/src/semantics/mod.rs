//! Forward denotational semantics over partial density matrices.
//!
//! A program denotes a trace-nonincreasing linear map on partial density
//! matrices. The six statement forms evaluate as: `skip` is the identity;
//! initialization and unitary application act through their channels; `S1; S2`
//! runs `S1` first; `case` sums the branch images of the unnormalized
//! post-measurement states (so probability-0 branches contribute zero without
//! any normalization); `while` accumulates the exit-branch images of the
//! iterated loop, approximating the least fixed point from below by Kleene
//! iteration with a dual stopping rule (residual mass threshold or iteration
//! cap). Non-convergence is reported, never silently truncated.

use crate::frontend::{ElaboratedProgram, Ir};
use crate::operators::{MeasurementSet, OperatorError, Pdm};
use crate::tolerances::Tolerances;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("state layout does not match the program layout")]
    LayoutMismatch,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Options for loop approximation.
#[derive(Debug, Clone)]
pub struct SemanticsOptions {
    /// Stop a loop when its live trace falls below this threshold.
    pub epsilon_mass: f64,
    /// Hard cap on loop iterations; hitting it reports non-convergence.
    pub max_iterations: usize,
    /// When set, every intermediate state is validated against these
    /// tolerances (used by property suites; expensive).
    pub validate: Option<Tolerances>,
}

impl Default for SemanticsOptions {
    fn default() -> Self {
        Self {
            epsilon_mass: 1e-9,
            max_iterations: 10_000,
            validate: None,
        }
    }
}

/// Aggregated per-loop iteration counts.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LoopStats {
    pub loop_id: usize,
    /// Total iterations across all executions of this loop.
    pub iterations: usize,
    /// Total live mass abandoned when this loop stopped.
    pub residual_mass: f64,
    pub converged: bool,
}

/// Result of evaluating a program on a state.
#[derive(Debug, Clone)]
pub struct SemanticsResult {
    pub state: Pdm,
    /// Mass lost to truncated loops: `tr(input) - tr(output)`, clamped at 0.
    pub residual_mass: f64,
    pub converged: bool,
    pub loops: Vec<LoopStats>,
}

struct Tracker {
    loops: BTreeMap<usize, LoopStats>,
    converged: bool,
    validate: Option<Tolerances>,
}

impl Tracker {
    fn new(opts: &SemanticsOptions) -> Self {
        Self {
            loops: BTreeMap::new(),
            converged: true,
            validate: opts.validate,
        }
    }

    fn record(&mut self, loop_id: usize, iterations: usize, residual: f64, converged: bool) {
        let entry = self.loops.entry(loop_id).or_insert(LoopStats {
            loop_id,
            iterations: 0,
            residual_mass: 0.0,
            converged: true,
        });
        entry.iterations += iterations;
        entry.residual_mass += residual;
        entry.converged &= converged;
        self.converged &= converged;
    }

    fn check(&self, state: &Pdm) -> Result<(), EvalError> {
        if let Some(tol) = &self.validate {
            state.validate(tol)?;
        }
        Ok(())
    }
}

/// Evaluates a program on an initial state.
pub fn eval(
    program: &ElaboratedProgram,
    rho: &Pdm,
    opts: &SemanticsOptions,
) -> Result<SemanticsResult, EvalError> {
    if rho.layout() != &program.layout {
        return Err(EvalError::LayoutMismatch);
    }
    let mut tracker = Tracker::new(opts);
    let out = eval_ir(&program.ir, rho, opts, &mut tracker)?;
    let residual = (rho.trace() - out.trace()).max(0.0);
    Ok(SemanticsResult {
        state: out,
        residual_mass: residual,
        converged: tracker.converged,
        loops: tracker.loops.into_values().collect(),
    })
}

fn eval_ir(
    ir: &Ir,
    rho: &Pdm,
    opts: &SemanticsOptions,
    tracker: &mut Tracker,
) -> Result<Pdm, EvalError> {
    let out = match ir {
        Ir::Skip => rho.clone(),
        Ir::InitKet { steps, .. } => {
            let mut state = rho.clone();
            for step in steps {
                state = crate::operators::init_variable(&state, rho.layout(), step.var, step.basis)?;
                if let Some(h) = &step.hadamard {
                    state = h.apply(&state);
                }
            }
            state
        }
        Ir::Unitary(op) => op.apply(rho),
        Ir::Seq(items) => {
            let mut state = rho.clone();
            for item in items {
                state = eval_ir(item, &state, opts, tracker)?;
            }
            state
        }
        Ir::Case { mset, branches } => {
            let mut acc = Pdm::zero(rho.layout().clone());
            for (id, body) in branches {
                let post = mset.post_unnormalized(rho, *id)?;
                if post.trace() <= 0.0 {
                    continue;
                }
                let image = eval_ir(body, &post, opts, tracker)?;
                acc.add_assign(&image);
            }
            acc
        }
        Ir::While {
            mset,
            body,
            loop_id,
        } => {
            let (acc, live, iterations, converged) =
                eval_while(mset, body, rho, opts, tracker)?;
            tracker.record(*loop_id, iterations, live.trace(), converged);
            acc
        }
    };
    tracker.check(&out)?;
    Ok(out)
}

#[allow(clippy::type_complexity)]
fn eval_while(
    mset: &MeasurementSet,
    body: &Ir,
    rho: &Pdm,
    opts: &SemanticsOptions,
    tracker: &mut Tracker,
) -> Result<(Pdm, Pdm, usize, bool), EvalError> {
    let mut acc = Pdm::zero(rho.layout().clone());
    let mut live = rho.clone();
    let mut iterations = 0usize;
    let converged = loop {
        let exit = mset.post_unnormalized(&live, 0)?;
        acc.add_assign(&exit);
        let cont = mset.post_unnormalized(&live, 1)?;
        live = eval_ir(body, &cont, opts, tracker)?;
        iterations += 1;
        if live.trace() < opts.epsilon_mass {
            break true;
        }
        if iterations >= opts.max_iterations {
            break false;
        }
    };
    Ok((acc, live, iterations, converged))
}

/// One unfolding step of a loop: the exit contribution `M₀σM₀†` and the next
/// live state `⟦body⟧(M₁σM₁†)`, both unnormalized.
pub fn char_fun_semantics_step(
    mset: &MeasurementSet,
    body: &Ir,
    sigma: &Pdm,
    opts: &SemanticsOptions,
) -> Result<(Pdm, Pdm), EvalError> {
    let exit = mset.post_unnormalized(sigma, 0)?;
    let cont = mset.post_unnormalized(sigma, 1)?;
    let mut tracker = Tracker::new(opts);
    let next = eval_ir(body, &cont, opts, &mut tracker)?;
    Ok((exit, next))
}

/// Evaluates a bare IR fragment (used by the runtime engines).
pub(crate) fn eval_fragment(
    ir: &Ir,
    rho: &Pdm,
    opts: &SemanticsOptions,
) -> Result<(Pdm, bool), EvalError> {
    let mut tracker = Tracker::new(opts);
    let out = eval_ir(ir, rho, opts, &mut tracker)?;
    Ok((out, tracker.converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{elaborate, parse};
    use crate::operators::CMatrix;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn program(src: &str) -> ElaboratedProgram {
        elaborate(&parse(src).unwrap(), &Tolerances::default()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn skip_is_identity() {
        let p = program("var q : bool; skip");
        let rho = Pdm::basis_state(p.layout.clone(), &[1]).unwrap();
        let r = eval(&p, &rho, &SemanticsOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.state.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn init_then_hadamard_gives_plus() {
        let p = program("var q : bool; q := |0>; [q] *= H");
        let rho = Pdm::basis_state(p.layout.clone(), &[1]).unwrap();
        let r = eval(&p, &rho, &SemanticsOptions::default()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.state.matrix()[(i, j)] - c(0.5, 0.)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reset_loop_terminates_in_two_iterations() {
        let p = program("var q : bool; while M_std[q] = 1 do q := |0> od");
        let rho = Pdm::basis_state(p.layout.clone(), &[1]).unwrap();
        let r = eval(&p, &rho, &SemanticsOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.residual_mass < 1e-15);
        assert_eq!(r.loops.len(), 1);
        assert_eq!(r.loops[0].iterations, 2);
        let expect = Pdm::basis_state(p.layout.clone(), &[0]).unwrap();
        assert!((r.state.matrix() - expect.matrix())
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn one_step_of_a_skip_body_splits_plus() {
        let p = program("var q : bool; while M_std[q] = 1 do skip od");
        let (mset, body) = match &p.ir {
            Ir::While { mset, body, .. } => (mset.clone(), body.clone()),
            other => panic!("unexpected {other:?}"),
        };
        let plus = {
            let m = CMatrix::from_fn(2, 2, |_, _| c(0.5, 0.));
            Pdm::from_matrix_unchecked(p.layout.clone(), m)
        };
        let (exit, next) =
            char_fun_semantics_step(&mset, &body, &plus, &SemanticsOptions::default()).unwrap();
        // exit = 0.5|0><0|, next = 0.5|1><1|
        assert!((exit.matrix()[(0, 0)] - c(0.5, 0.)).norm() < 1e-12);
        assert!(exit.matrix()[(1, 1)].norm() < 1e-12);
        assert!((next.matrix()[(1, 1)] - c(0.5, 0.)).norm() < 1e-12);
        assert!(next.matrix()[(0, 0)].norm() < 1e-12);
        // a terminated branch feeds the body nothing
        let zero_live = Pdm::basis_state(p.layout.clone(), &[0]).unwrap();
        let (_, next) =
            char_fun_semantics_step(&mset, &body, &zero_live, &SemanticsOptions::default())
                .unwrap();
        assert!(next.trace() < 1e-15);
    }

    #[test]
    fn geometric_loop_decays_by_halves() {
        // body re-prepares |+>; live trace after n steps is 2^-n
        let p = program("var q : bool; while M_std[q] = 1 do q := |0>; [q] *= H od");
        let plus = {
            let m = CMatrix::from_fn(2, 2, |_, _| c(0.5, 0.));
            Pdm::from_matrix_unchecked(p.layout.clone(), m)
        };
        let (mset, body) = match &p.ir {
            Ir::While { mset, body, .. } => (mset.clone(), body.clone()),
            other => panic!("unexpected {other:?}"),
        };
        let opts = SemanticsOptions::default();
        let mut live = plus;
        for n in 1..=10 {
            let (_exit, next) = char_fun_semantics_step(&mset, &body, &live, &opts).unwrap();
            live = next;
            assert!((live.trace() - 0.5f64.powi(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn case_on_plus_splits_mass() {
        let p = program(
            "var q : bool; q := |0>; [q] *= H; \
             case M_std[q] of 0 -> skip; 1 -> q := |0> end",
        );
        let rho = Pdm::basis_state(p.layout.clone(), &[0]).unwrap();
        let r = eval(&p, &rho, &SemanticsOptions::default()).unwrap();
        // both branches end in |0><0|, total trace 1
        let expect = Pdm::basis_state(p.layout.clone(), &[0]).unwrap();
        assert!((r.state.matrix() - expect.matrix())
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn diverging_loop_reports_nonconvergence() {
        let p = program(
            "var q : bool; \
             define M_triv := measurement { 0: [[[0,0],[0,0]],[[0,0],[0,0]]], \
                                            1: [[[1,0],[0,0]],[[0,0],[1,0]]] } on 2; \
             while M_triv[q] = 1 do skip od",
        );
        let rho = Pdm::basis_state(p.layout.clone(), &[0]).unwrap();
        let opts = SemanticsOptions {
            max_iterations: 50,
            ..Default::default()
        };
        let r = eval(&p, &rho, &opts).unwrap();
        assert!(!r.converged);
        assert!((r.residual_mass - 1.0).abs() < 1e-9);
        assert_eq!(r.loops[0].iterations, 50);
    }

    #[test]
    fn trace_never_increases_and_linearity_holds() {
        let src = "var q : bool; var r : bool; \
                   [q] *= H; \
                   case M_std[q] of 0 -> skip; 1 -> [r] *= X end; \
                   while M_std[r] = 1 do r := |0>; [r] *= H od";
        let p = program(src);
        let mut rng = crate::rng::SplitMix64::new(404);
        let dim = p.layout.total_dim();
        let opts = SemanticsOptions {
            epsilon_mass: 1e-300,
            max_iterations: 60,
            ..Default::default()
        };
        for _ in 0..5 {
            let g1 = CMatrix::from_fn(dim, dim, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
            let g2 = CMatrix::from_fn(dim, dim, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
            let p1 = &g1 * g1.adjoint();
            let p2 = &g2 * g2.adjoint();
            let rho1 = Pdm::from_matrix_unchecked(p.layout.clone(), p1.scale(1.0 / p1.trace().re));
            let rho2 = Pdm::from_matrix_unchecked(p.layout.clone(), p2.scale(1.0 / p2.trace().re));
            let (a, b) = (0.3, 0.45);
            let combo = Pdm::from_matrix_unchecked(
                p.layout.clone(),
                rho1.matrix().scale(a) + rho2.matrix().scale(b),
            );
            let r1 = eval(&p, &rho1, &opts).unwrap();
            let r2 = eval(&p, &rho2, &opts).unwrap();
            let rc = eval(&p, &combo, &opts).unwrap();
            assert!(rc.state.trace() <= combo.trace() + 1e-9);
            let lin = r1.state.matrix().scale(a) + r2.state.matrix().scale(b);
            assert!((rc.state.matrix() - lin).iter().all(|z| z.norm() < 1e-9));
        }
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let p = program("var q : bool; skip");
        let other = Arc::new(crate::operators::Layout::new(vec![("z", 3)]).unwrap());
        let rho = Pdm::all_zero(other);
        assert!(matches!(
            eval(&p, &rho, &SemanticsOptions::default()),
            Err(EvalError::LayoutMismatch)
        ));
    }
}
