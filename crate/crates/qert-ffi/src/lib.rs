//! C ABI for the qert expected-runtime analyzer.
//!
//! The surface follows the usual opaque-handle pattern: programs and cost
//! models are created through constructors, passed around as pointers, and
//! released with their `_free` functions. Results come back as JSON strings
//! (same schema as `qert --json`) that must be released with
//! [`qert_string_free`]. Every fallible call returns a [`QertStatus`]; on
//! failure a human-readable message is available from [`qert_last_error`]
//! until the next call on the same thread.
//!
//! The generated header lives at `include/qert.h`.

use qert::bb84;
use qert::ert::{
    check_invariant, ert_of_program, CheckMode, CheckOptions, CostModel, ErtOptions,
    InvariantStatus, RuntimeExpr,
};
use qert::frontend::{elaborate, parse, pretty_print, ElaboratedProgram};
use qert::operators::Pdm;
use qert::trajectory::{estimate, TrajectoryConfig};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QertStatus {
    /// Success.
    Ok = 0,
    /// A null pointer or malformed argument.
    InvalidArgument = 1,
    /// The source text failed to lex/parse/elaborate.
    ParseError = 2,
    /// Inputs were structurally valid but failed validation (cost model,
    /// invariant, state, parameters).
    ValidationError = 3,
    /// A loop hit its unrolling cap; reported values are lower bounds.
    NonConvergence = 4,
    /// A verification check failed (refuted invariant, failed case study).
    CheckFailed = 5,
    /// Unexpected internal failure.
    InternalError = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

/// Message for the most recent non-`Ok` status on this thread, or null.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn qert_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

/// Tool version as a static string.
#[no_mangle]
pub extern "C" fn qert_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a `qert_*` function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn qert_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// A parsed and elaborated program (opaque).
pub struct QertProgram {
    inner: ElaboratedProgram,
}

/// A runtime cost model (opaque).
pub struct QertCostModel {
    inner: CostModel,
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, QertStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(QertStatus::InvalidArgument);
    }
    unsafe { CStr::from_ptr(s) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        QertStatus::InvalidArgument
    })
}

fn give_string(s: String, out: *mut *mut c_char) -> QertStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            QertStatus::Ok
        }
        Err(_) => {
            set_error("output contained an interior NUL byte");
            QertStatus::InternalError
        }
    }
}

/// Parses and elaborates a program from source text.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qert_program_parse(
    source: *const c_char,
    out: *mut *mut QertProgram,
) -> QertStatus {
    if out.is_null() {
        set_error("null output pointer");
        return QertStatus::InvalidArgument;
    }
    let source = match unsafe { read_str(source) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let ast = match parse(source) {
        Ok(ast) => ast,
        Err(e) => {
            set_error(e.to_string());
            return QertStatus::ParseError;
        }
    };
    match elaborate(&ast, &qert::Tolerances::default()) {
        Ok(program) => {
            unsafe { *out = Box::into_raw(Box::new(QertProgram { inner: program })) };
            QertStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            QertStatus::ParseError
        }
    }
}

/// Releases a program handle.
///
/// # Safety
/// `program` must come from [`qert_program_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qert_program_free(program: *mut QertProgram) {
    if !program.is_null() {
        drop(unsafe { Box::from_raw(program) });
    }
}

/// Canonical (pretty-printed) source of a program.
///
/// # Safety
/// `program` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qert_program_pretty(
    program: *const QertProgram,
    out: *mut *mut c_char,
) -> QertStatus {
    if program.is_null() || out.is_null() {
        set_error("null argument");
        return QertStatus::InvalidArgument;
    }
    let program = unsafe { &*program };
    give_string(pretty_print(&program.inner.source), out)
}

/// The unit cost model (every operation costs 1).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qert_cost_model_unit(out: *mut *mut QertCostModel) -> QertStatus {
    if out.is_null() {
        set_error("null output pointer");
        return QertStatus::InvalidArgument;
    }
    unsafe {
        *out = Box::into_raw(Box::new(QertCostModel {
            inner: CostModel::unit(),
        }))
    };
    QertStatus::Ok
}

/// Parses a cost model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qert_cost_model_from_json(
    json: *const c_char,
    out: *mut *mut QertCostModel,
) -> QertStatus {
    if out.is_null() {
        set_error("null output pointer");
        return QertStatus::InvalidArgument;
    }
    let json = match unsafe { read_str(json) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    match CostModel::from_json(json) {
        Ok(model) => {
            unsafe { *out = Box::into_raw(Box::new(QertCostModel { inner: model })) };
            QertStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            QertStatus::ValidationError
        }
    }
}

/// Releases a cost model handle.
///
/// # Safety
/// `model` must come from a `qert_cost_model_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn qert_cost_model_free(model: *mut QertCostModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Runs both runtime evaluators from the all-zero state and returns a JSON
/// report `{backward, forward, difference, converged}`.
///
/// # Safety
/// All pointers must be live; `out_json` receives an owned string.
#[no_mangle]
pub unsafe extern "C" fn qert_analyze(
    program: *const QertProgram,
    cost: *const QertCostModel,
    out_json: *mut *mut c_char,
) -> QertStatus {
    if program.is_null() || cost.is_null() || out_json.is_null() {
        set_error("null argument");
        return QertStatus::InvalidArgument;
    }
    let program = unsafe { &*program };
    let cost = unsafe { &*cost };
    let rho = Pdm::all_zero(program.inner.layout.clone());
    match ert_of_program(&program.inner, &rho, &cost.inner, &ErtOptions::default()) {
        Ok(r) => {
            let json = serde_json::json!({
                "backward": r.backward.value,
                "forward": r.forward.value,
                "difference": r.difference,
                "converged": r.converged,
            });
            let status = give_string(json.to_string(), out_json);
            if status == QertStatus::Ok && !r.converged {
                set_error("a loop hit the unrolling cap; values are lower bounds");
                return QertStatus::NonConvergence;
            }
            status
        }
        Err(e) => {
            set_error(e.to_string());
            QertStatus::ValidationError
        }
    }
}

/// Monte Carlo estimate from the all-zero state; returns JSON
/// `{mean, std_error, trials, truncated_trials}`.
///
/// # Safety
/// All pointers must be live; `out_json` receives an owned string.
#[no_mangle]
pub unsafe extern "C" fn qert_simulate(
    program: *const QertProgram,
    cost: *const QertCostModel,
    trials: u64,
    seed: u64,
    max_steps: u64,
    out_json: *mut *mut c_char,
) -> QertStatus {
    if program.is_null() || cost.is_null() || out_json.is_null() {
        set_error("null argument");
        return QertStatus::InvalidArgument;
    }
    let program = unsafe { &*program };
    let cost = unsafe { &*cost };
    let rho = Pdm::all_zero(program.inner.layout.clone());
    let config = TrajectoryConfig {
        trials,
        seed,
        max_steps,
    };
    match estimate(&program.inner, &rho, &config, &cost.inner) {
        Ok(est) => {
            let json = serde_json::json!({
                "mean": est.mean,
                "std_error": est.std_error,
                "trials": est.trials,
                "truncated_trials": est.truncated_trials,
            });
            give_string(json.to_string(), out_json)
        }
        Err(e) => {
            set_error(e.to_string());
            QertStatus::ValidationError
        }
    }
}

/// Checks an invariant (JSON form) against the program's first loop.
/// `exact_mode` non-zero requests the algebraic check (downgraded to
/// sampling when the loop body itself loops). Returns JSON
/// `{status, margin}`. `Ok` means verified; a refutation returns
/// `CheckFailed`, an inconclusive sample check `NonConvergence`.
///
/// # Safety
/// All pointers must be live; `out_json` receives an owned string.
#[no_mangle]
pub unsafe extern "C" fn qert_check_invariant(
    program: *const QertProgram,
    cost: *const QertCostModel,
    invariant_json: *const c_char,
    exact_mode: i32,
    out_json: *mut *mut c_char,
) -> QertStatus {
    if program.is_null() || cost.is_null() || out_json.is_null() {
        set_error("null argument");
        return QertStatus::InvalidArgument;
    }
    let program = unsafe { &*program };
    let cost = unsafe { &*cost };
    let inv_text = match unsafe { read_str(invariant_json) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let inv = match RuntimeExpr::from_json(inv_text, &program.inner.layout, 1e-8) {
        Ok(inv) => inv,
        Err(e) => {
            set_error(e.to_string());
            return QertStatus::ValidationError;
        }
    };
    let Some((mset, body)) = bb84::find_loop(&program.inner.ir) else {
        set_error("the program has no loop to check");
        return QertStatus::ValidationError;
    };
    let mode = if exact_mode != 0 {
        CheckMode::Exact
    } else {
        CheckMode::Sample
    };
    let verdict = match check_invariant(
        mset,
        body,
        &RuntimeExpr::zero(),
        &inv,
        mode,
        &cost.inner,
        &program.inner.layout,
        &CheckOptions::default(),
    ) {
        Ok(v) => v,
        Err(e) => {
            set_error(e.to_string());
            return QertStatus::ValidationError;
        }
    };
    let json = serde_json::json!({
        "status": verdict.status,
        "margin": verdict.margin,
    });
    let status = give_string(json.to_string(), out_json);
    if status != QertStatus::Ok {
        return status;
    }
    match verdict.status {
        InvariantStatus::Verified => QertStatus::Ok,
        InvariantStatus::Unknown => QertStatus::NonConvergence,
        InvariantStatus::Refuted => QertStatus::CheckFailed,
    }
}

/// Builds the BB84 case study for `(m, dim)` and runs its verification.
/// Returns the full JSON check report; `Ok` means every check passed.
///
/// # Safety
/// `out_json` must be a valid pointer and receives an owned string.
#[no_mangle]
pub unsafe extern "C" fn qert_bb84_verify(
    m: usize,
    dim: usize,
    trials: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> QertStatus {
    if out_json.is_null() {
        set_error("null output pointer");
        return QertStatus::InvalidArgument;
    }
    let instance = match bb84::build(m, dim) {
        Ok(i) => i,
        Err(e) => {
            set_error(e.to_string());
            return QertStatus::ValidationError;
        }
    };
    let opts = bb84::VerifyOptions {
        trajectory: TrajectoryConfig {
            trials,
            seed,
            max_steps: 1_000_000,
        },
        ..Default::default()
    };
    match bb84::verify(&instance, &CostModel::unit(), &opts) {
        Ok(report) => {
            let json = serde_json::json!({
                "closed_form": report.closed_form,
                "backward": report.backward,
                "forward": report.forward,
                "invariant_margin": report.invariant_margin,
                "mean": report.estimate.mean,
                "std_error": report.estimate.std_error,
                "checks": report.checks,
                "passed": report.passed,
            });
            let status = give_string(json.to_string(), out_json);
            if status == QertStatus::Ok && !report.passed {
                set_error("one or more case-study checks failed");
                return QertStatus::CheckFailed;
            }
            status
        }
        Err(e) => {
            set_error(e.to_string());
            QertStatus::InternalError
        }
    }
}
