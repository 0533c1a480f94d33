//! Case study: a simplified BB84 key-distribution loop.
//!
//! The program distributes an `m`-bit key: a counter `k` (a `d`-level
//! integer, `d > m`) counts completed bits; per iteration Alice flips two
//! coins (`A`, prepared as `|++⟩`), Bob one (`B`, prepared as `|+⟩`); both
//! are measured, and when the basis coins agree the key bit is stored into
//! `Q` and the counter incremented, otherwise the round is discarded. The
//! loop is guarded by a threshold measurement distinguishing `k >= m`.
//!
//! The module builds the program for parameters `(m, d)`, produces the exact
//! affine loop invariant, evaluates the closed-form expected runtime
//! `T⟨|0⟩⟩ + T⟨𝔐_m⟩ + 2m·𝒯`, and cross-verifies all three against the
//! runtime evaluators and the trajectory sampler.

use crate::ert::{
    check_invariant, ert_of_program, CheckMode, CheckOptions, CostModel, ErtError, ErtOptions,
    InvariantStatus, RuntimeExpr,
};
use crate::frontend::{elaborate, parse, pretty_print, ElaboratedProgram, Ir};
use crate::operators::{CMatrix, MeasurementSet, Observable, Pdm};
use crate::tolerances::Tolerances;
use crate::trajectory::{estimate, RuntimeEstimate, TrajectoryConfig};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Bb84Error {
    #[error("key length m must satisfy 1 <= m < d, got m = {m}, d = {d}")]
    BadParameters { m: usize, d: usize },
    #[error("generated source failed to elaborate: {0}")]
    Frontend(String),
    #[error(transparent)]
    Ert(#[from] ErtError),
}

/// A built instance for key length `m` and counter dimension `d`.
#[derive(Debug, Clone)]
pub struct Bb84Instance {
    pub m: usize,
    pub d: usize,
    pub program: ElaboratedProgram,
}

/// Canonical source text of the instance (also shipped as a corpus file).
pub fn source(m: usize, d: usize) -> Result<String, Bb84Error> {
    if m < 1 || m >= d {
        return Err(Bb84Error::BadParameters { m, d });
    }
    let mut s = String::new();
    s.push_str(&format!("var k : int[{d}];\n"));
    s.push_str("var A0 : bool;\nvar A1 : bool;\nvar B : bool;\n");
    for h in 0..m {
        s.push_str(&format!("var Q{h} : bool;\n"));
    }
    s.push_str(&format!("define M_m := builtin M_geq({m}, {d});\n"));
    s.push_str("define M_A := builtin M_std;\n");
    s.push_str("define M_B := builtin M_std;\n");
    s.push_str(&format!("define U_P0 := builtin U_P(0, {d}, {m});\n"));
    s.push_str(&format!("define U_P1 := builtin U_P(1, {d}, {m});\n"));
    s.push_str(&format!("define U_succ := builtin U_succ({d});\n"));
    s.push_str("k := |0>;\n");
    s.push_str("while M_m[k] = 1 do\n");
    s.push_str("  [A0, A1] := |++>;\n  B := |+>;\n");
    s.push_str("  case M_A[A0, A1] of\n");
    let kq: Vec<String> = std::iter::once("k".to_string())
        .chain((0..m).map(|h| format!("Q{h}")))
        .collect();
    let kq = kq.join(", ");
    for eb in 0..4 {
        let e = eb / 2;
        let b = eb % 2;
        let store = format!("[{kq}] *= U_P{b}; [k] *= U_succ");
        let (branch0, branch1) = if e == 0 {
            (store, "skip".to_string())
        } else {
            ("skip".to_string(), store)
        };
        s.push_str(&format!(
            "    {eb} -> case M_B[B] of 0 -> {branch0}; 1 -> {branch1} end{}\n",
            if eb < 3 { ";" } else { "" }
        ));
    }
    s.push_str("  end\nod\n");
    // canonicalize through the pretty-printer
    let ast = parse(&s).map_err(|e| Bb84Error::Frontend(e.to_string()))?;
    Ok(pretty_print(&ast))
}

/// Builds and elaborates the instance.
pub fn build(m: usize, d: usize) -> Result<Bb84Instance, Bb84Error> {
    let src = source(m, d)?;
    let ast = parse(&src).map_err(|e| Bb84Error::Frontend(e.to_string()))?;
    let program =
        elaborate(&ast, &Tolerances::default()).map_err(|e| Bb84Error::Frontend(e.to_string()))?;
    Ok(Bb84Instance { m, d, program })
}

impl Bb84Instance {
    /// The guarded loop of the program.
    pub fn main_loop(&self) -> (&Arc<MeasurementSet>, &Ir) {
        find_loop(&self.program.ir).expect("the program contains its loop")
    }
}

/// First `while` on the statement spine.
pub fn find_loop(ir: &Ir) -> Option<(&Arc<MeasurementSet>, &Ir)> {
    match ir {
        Ir::While { mset, body, .. } => Some((mset, body)),
        Ir::Seq(items) => items.iter().find_map(find_loop),
        _ => None,
    }
}

/// Per-iteration expected cost of everything after the guard measurement:
/// `𝒯* = T⟨|++⟩⟩ + T⟨|+⟩⟩ + T⟨𝔐_A⟩ + T⟨𝔐_B⟩
///        + ½(½T⟨U_P0⟩ + ½T⟨U_P1⟩ + T⟨U_succ⟩) + ½·skip`.
pub fn t_star(cost: &CostModel) -> Result<f64, ErtError> {
    Ok(cost.init_cost("|++>")?
        + cost.init_cost("|+>")?
        + cost.measurement_cost("M_A")?
        + cost.measurement_cost("M_B")?
        + 0.5 * (0.5 * cost.unitary_cost("U_P0")?
            + 0.5 * cost.unitary_cost("U_P1")?
            + cost.unitary_cost("U_succ")?)
        + 0.5 * cost.skip)
}

/// Full per-iteration cost including the guard: `𝒯 = T⟨𝔐_m⟩ + 𝒯*`.
pub fn t_iteration(cost: &CostModel) -> Result<f64, ErtError> {
    Ok(cost.measurement_cost("M_m")? + t_star(cost)?)
}

/// Closed-form expected runtime `T⟨|0⟩⟩ + T⟨𝔐_m⟩ + 2m·𝒯`.
pub fn closed_form(m: usize, cost: &CostModel) -> Result<f64, ErtError> {
    Ok(cost.init_cost("|0>")? + cost.measurement_cost("M_m")? + 2.0 * m as f64 * t_iteration(cost)?)
}

/// The loop invariant: `T⟨𝔐_m⟩ + 2(T⟨𝔐_m⟩ + 𝒯*) Σ_{h=0}^{m} (m-h)·tr(|h⟩⟨h|_k ρ)`.
///
/// The sum runs over the counter window `[0, m]`; states reachable from
/// `k = |0⟩` have no support below 0, so the truncation is exact on the
/// reachable cone. The `h = m` term carries coefficient 0 and is kept for
/// completeness.
pub fn appendix_invariant(
    instance: &Bb84Instance,
    cost: &CostModel,
) -> Result<RuntimeExpr, ErtError> {
    let layout = &instance.program.layout;
    let k = layout.index_of("k").expect("instance declares k");
    let guard = cost.measurement_cost("M_m")?;
    let weight = 2.0 * (guard + t_star(cost)?);
    let mut terms = Vec::new();
    for h in 0..=instance.m {
        let mut proj = CMatrix::zeros(instance.d, instance.d);
        proj[(h, h)] = Complex64::new(1.0, 0.0);
        let obs = Observable::from_subspace(layout.clone(), &[k], &proj, 1e-8)?;
        terms.push((weight * (instance.m - h) as f64, obs));
    }
    Ok(RuntimeExpr::new(guard, terms))
}

/// One verification step's outcome.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Full cross-verification report.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub closed_form: f64,
    pub t_star: f64,
    pub t_iteration: f64,
    pub invariant_margin: f64,
    pub invariant_status: InvariantStatus,
    pub backward: f64,
    pub forward: f64,
    pub estimate: RuntimeEstimate,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub ert: ErtOptions,
    pub check: CheckOptions,
    pub trajectory: TrajectoryConfig,
}

/// Runs the three-way verification:
/// 1. the invariant is an exact pre-fixpoint (margin ~ 0, certified);
/// 2. both runtime evaluators agree with the closed form within 1e-6;
/// 3. the trajectory estimate agrees within 3 standard errors.
pub fn verify(
    instance: &Bb84Instance,
    cost: &CostModel,
    opts: &VerifyOptions,
) -> Result<VerifyReport, Bb84Error> {
    let mut checks = Vec::new();
    let cf = closed_form(instance.m, cost)?;
    let ts = t_star(cost)?;
    let ti = t_iteration(cost)?;

    // (i) exact invariant check on the loop with continuation 0
    let inv = appendix_invariant(instance, cost)?;
    let (mset, body) = instance.main_loop();
    let verdict = check_invariant(
        mset,
        body,
        &RuntimeExpr::zero(),
        &inv,
        CheckMode::Exact,
        cost,
        &instance.program.layout,
        &opts.check,
    )?;
    let inv_ok = verdict.status == InvariantStatus::Verified && verdict.margin.abs() < 1e-8;
    checks.push(CheckResult {
        name: "invariant-fixed-point".into(),
        passed: inv_ok,
        detail: format!(
            "status {:?}, margin {:.3e} (expected verified with |margin| < 1e-8)",
            verdict.status, verdict.margin
        ),
    });

    // (ii) both evaluators against the closed form
    let rho = Pdm::all_zero(instance.program.layout.clone());
    let runtime = ert_of_program(&instance.program, &rho, cost, &opts.ert)?;
    let backward_ok = runtime.backward.converged && (runtime.backward.value - cf).abs() < 1e-6;
    let forward_ok = runtime.forward.converged && (runtime.forward.value - cf).abs() < 1e-6;
    checks.push(CheckResult {
        name: "backward-evaluator".into(),
        passed: backward_ok,
        detail: format!(
            "backward {} vs closed form {cf} (|Δ| = {:.3e})",
            runtime.backward.value,
            (runtime.backward.value - cf).abs()
        ),
    });
    checks.push(CheckResult {
        name: "forward-evaluator".into(),
        passed: forward_ok,
        detail: format!(
            "forward {} vs closed form {cf} (|Δ| = {:.3e})",
            runtime.forward.value,
            (runtime.forward.value - cf).abs()
        ),
    });

    // (iii) trajectory estimate within 3 standard errors
    let est = estimate(&instance.program, &rho, &opts.trajectory, cost)?;
    let traj_ok = (est.mean - cf).abs() <= 3.0 * est.std_error + 1e-9
        && est.truncated_trials == 0;
    checks.push(CheckResult {
        name: "trajectory-estimate".into(),
        passed: traj_ok,
        detail: format!(
            "mean {} ± {} over {} trials vs {cf}",
            est.mean, est.std_error, est.trials
        ),
    });

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        closed_form: cf,
        t_star: ts,
        t_iteration: ti,
        invariant_margin: verdict.margin,
        invariant_status: verdict.status,
        backward: runtime.backward.value,
        forward: runtime.forward.value,
        estimate: est,
        checks,
        passed,
    })
}
