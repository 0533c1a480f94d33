//! Expected-runtime analysis for quantum while-programs.
//!
//! `qert` implements a small imperative quantum language (`skip`, basis-ket
//! initialization, unitary application, sequencing, measurement `case`, and
//! measurement-guarded `while`), its denotational semantics over partial
//! density matrices, and an expected-runtime transformer in continuation
//! passing style. On top of that it provides:
//!
//! - three runtime evaluators that cross-check each other: a backward
//!   (continuation-passing) evaluator with Kleene unrolling for loops, a
//!   forward mass-propagation evaluator, and an exact affine evaluator for
//!   loop-free code that pushes observables through channel adjoints;
//! - a loop-invariant checker that certifies runtime upper bounds through an
//!   operator inequality (a pre-fixpoint test decided by a minimum-eigenvalue
//!   computation);
//! - a Monte Carlo trajectory sampler that estimates expected runtime
//!   operationally and independently of the calculus;
//! - a built-in case study: a simplified BB84 key-distribution loop with its
//!   closed-form expected runtime and exact loop invariant.
//!
//! The `qert` binary exposes all of this behind `analyze`, `check-invariant`,
//! `simulate`, `bb84` and `parse` subcommands; see the repository README.

pub mod bb84;
pub mod cli;
pub mod ert;
pub mod frontend;
pub mod operators;
pub mod report;
pub mod rng;
pub mod semantics;
pub mod tolerances;
pub mod trajectory;

pub use operators::{
    Layout, MeasurementSet, Observable, OperatorError, Pdm, UnitaryOp,
};
pub use tolerances::Tolerances;

/// Tool version reported in JSON outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
