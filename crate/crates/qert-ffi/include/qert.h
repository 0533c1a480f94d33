/* C bindings for the qert expected-runtime analyzer. */

#pragma once

/* Generated with cbindgen:0.29.4 */

/* This file is generated by cbindgen from crates/qert-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call.
typedef enum QertStatus {
  // Success.
  OK = 0,
  // A null pointer or malformed argument.
  INVALID_ARGUMENT = 1,
  // The source text failed to lex/parse/elaborate.
  PARSE_ERROR = 2,
  // Inputs were structurally valid but failed validation (cost model,
  // invariant, state, parameters).
  VALIDATION_ERROR = 3,
  // A loop hit its unrolling cap; reported values are lower bounds.
  NON_CONVERGENCE = 4,
  // A verification check failed (refuted invariant, failed case study).
  CHECK_FAILED = 5,
  // Unexpected internal failure.
  INTERNAL_ERROR = 6,
} QertStatus;

// A runtime cost model (opaque).
typedef struct QertCostModel QertCostModel;

// A parsed and elaborated program (opaque).
typedef struct QertProgram QertProgram;

// Message for the most recent non-`Ok` status on this thread, or null.
// The pointer stays valid until the next failing call on the thread.
const char *qert_last_error(void);

// Tool version as a static string.
const char *qert_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must have been returned by a `qert_*` function and not freed before.
void qert_string_free(char *s);

// Parses and elaborates a program from source text.
//
// # Safety
// `source` must be a NUL-terminated string; `out` must be a valid pointer.
enum QertStatus qert_program_parse(const char *source, struct QertProgram **out);

// Releases a program handle.
//
// # Safety
// `program` must come from [`qert_program_parse`] and not be freed twice.
void qert_program_free(struct QertProgram *program);

// Canonical (pretty-printed) source of a program.
//
// # Safety
// `program` must be a live handle; `out` must be a valid pointer.
enum QertStatus qert_program_pretty(const struct QertProgram *program, char **out);

// The unit cost model (every operation costs 1).
//
// # Safety
// `out` must be a valid pointer.
enum QertStatus qert_cost_model_unit(struct QertCostModel **out);

// Parses a cost model from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
enum QertStatus qert_cost_model_from_json(const char *json, struct QertCostModel **out);

// Releases a cost model handle.
//
// # Safety
// `model` must come from a `qert_cost_model_*` constructor.
void qert_cost_model_free(struct QertCostModel *model);

// Runs both runtime evaluators from the all-zero state and returns a JSON
// report `{backward, forward, difference, converged}`.
//
// # Safety
// All pointers must be live; `out_json` receives an owned string.
enum QertStatus qert_analyze(const struct QertProgram *program,
                             const struct QertCostModel *cost,
                             char **out_json);

// Monte Carlo estimate from the all-zero state; returns JSON
// `{mean, std_error, trials, truncated_trials}`.
//
// # Safety
// All pointers must be live; `out_json` receives an owned string.
enum QertStatus qert_simulate(const struct QertProgram *program,
                              const struct QertCostModel *cost,
                              uint64_t trials,
                              uint64_t seed,
                              uint64_t max_steps,
                              char **out_json);

// Checks an invariant (JSON form) against the program's first loop.
// `exact_mode` non-zero requests the algebraic check (downgraded to
// sampling when the loop body itself loops). Returns JSON
// `{status, margin}`. `Ok` means verified; a refutation returns
// `CheckFailed`, an inconclusive sample check `NonConvergence`.
//
// # Safety
// All pointers must be live; `out_json` receives an owned string.
enum QertStatus qert_check_invariant(const struct QertProgram *program,
                                     const struct QertCostModel *cost,
                                     const char *invariant_json,
                                     int32_t exact_mode,
                                     char **out_json);

// Builds the BB84 case study for `(m, dim)` and runs its verification.
// Returns the full JSON check report; `Ok` means every check passed.
//
// # Safety
// `out_json` must be a valid pointer and receives an owned string.
enum QertStatus qert_bb84_verify(size_t m,
                                 size_t dim,
                                 uint64_t trials,
                                 uint64_t seed,
                                 char **out_json);
