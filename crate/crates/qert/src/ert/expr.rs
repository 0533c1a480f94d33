//! Affine runtime expressions `t(ρ) = c₀ + Σⱼ cⱼ·tr(Aⱼ·ρ)`.
//!
//! This class of functions is closed under every loop-free runtime rule,
//! expressive enough for the case-study loop invariant, and checkable by an
//! eigenvalue test, which is why the engines restrict runtime functions and
//! invariants to it.

use super::ErtError;
use crate::operators::{CMatrix, Layout, Observable, Pdm};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// An affine trace expression over a fixed layout.
#[derive(Debug, Clone)]
pub struct RuntimeExpr {
    pub constant: f64,
    pub terms: Vec<(f64, Observable)>,
}

impl RuntimeExpr {
    /// The constant-zero runtime (`λρ. 0`).
    pub fn zero() -> Self {
        Self {
            constant: 0.0,
            terms: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn new(constant: f64, terms: Vec<(f64, Observable)>) -> Self {
        Self { constant, terms }
    }

    /// `t(ρ) = c₀ + Σ cⱼ·tr(Aⱼρ)` — the function itself.
    pub fn evaluate(&self, rho: &Pdm) -> f64 {
        let mut acc = self.constant;
        for (coeff, obs) in &self.terms {
            acc += coeff * obs.expectation(rho);
        }
        acc
    }

    /// Mass-weighted evaluation `c₀·tr(σ) + Σ cⱼ·tr(Aⱼσ)`, linear in `σ`.
    ///
    /// For a normalized state this equals [`RuntimeExpr::evaluate`]; for an
    /// unnormalized post-measurement state `σ = M ρ M†` it equals
    /// `Pr · t(σ/Pr)`, which is how the engines consume branch weights
    /// without ever dividing by a probability.
    pub fn evaluate_weighted(&self, sigma: &Pdm) -> f64 {
        let mut acc = self.constant * sigma.trace();
        for (coeff, obs) in &self.terms {
            acc += coeff * obs.expectation(sigma);
        }
        acc
    }

    /// Canonical form `(c₀, Σ cⱼ·Aⱼ)` on `layout`.
    pub fn canonical(&self, layout: &Arc<Layout>) -> (f64, CMatrix) {
        let d = layout.total_dim();
        let mut total = CMatrix::zeros(d, d);
        for (coeff, obs) in &self.terms {
            total += obs.matrix().scale(*coeff);
        }
        (self.constant, total)
    }

    /// Wraps a canonical form back into an expression (single combined term).
    pub fn from_canonical(
        constant: f64,
        matrix: CMatrix,
        layout: Arc<Layout>,
        herm_tol: f64,
    ) -> Result<Self, ErtError> {
        let is_zero = matrix.iter().all(|z| z.norm() == 0.0);
        let terms = if is_zero {
            Vec::new()
        } else {
            vec![(1.0, Observable::new(layout, matrix, herm_tol)?)]
        };
        Ok(Self { constant, terms })
    }
}

#[derive(Serialize, Deserialize)]
struct ObsJson {
    vars: Vec<String>,
    matrix: Vec<Vec<(f64, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coeff: f64,
    observable: ObsJson,
}

#[derive(Serialize, Deserialize)]
struct ExprJson {
    constant: f64,
    terms: Vec<TermJson>,
}

impl RuntimeExpr {
    /// Loads `{constant, terms: [{coeff, observable: {vars, matrix}}]}`;
    /// observables are given on the listed variables (row-major complex
    /// pairs) and extended to the full layout.
    pub fn from_json(json: &str, layout: &Arc<Layout>, herm_tol: f64) -> Result<Self, ErtError> {
        let parsed: ExprJson =
            serde_json::from_str(json).map_err(|e| ErtError::BadInvariant(e.to_string()))?;
        let mut terms = Vec::new();
        for term in parsed.terms {
            let mut targets = Vec::new();
            for name in &term.observable.vars {
                let idx = layout.index_of(name).ok_or_else(|| {
                    ErtError::BadInvariant(format!("unknown variable `{name}` in observable"))
                })?;
                targets.push(idx);
            }
            let n = term.observable.matrix.len();
            for row in &term.observable.matrix {
                if row.len() != n {
                    return Err(ErtError::BadInvariant("observable matrix is not square".into()));
                }
            }
            let sub = CMatrix::from_fn(n, n, |i, j| {
                Complex64::new(term.observable.matrix[i][j].0, term.observable.matrix[i][j].1)
            });
            let obs = Observable::from_subspace(layout.clone(), &targets, &sub, herm_tol)
                .map_err(|e| ErtError::BadInvariant(e.to_string()))?;
            terms.push((term.coeff, obs));
        }
        Ok(Self {
            constant: parsed.constant,
            terms,
        })
    }

    /// Serializes each observable on its original variable subset when
    /// known, otherwise on the full variable list.
    pub fn to_json(&self, layout: &Arc<Layout>) -> String {
        let all_vars: Vec<String> = layout.vars().map(|(n, _)| n.to_string()).collect();
        let terms = self
            .terms
            .iter()
            .map(|(coeff, obs)| {
                let (vars, m) = match obs.origin() {
                    Some((targets, sub)) => (
                        targets
                            .iter()
                            .map(|&t| layout.name_of(t).to_string())
                            .collect(),
                        sub.clone(),
                    ),
                    None => (all_vars.clone(), obs.matrix().clone()),
                };
                let rows = (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
                    .collect();
                TermJson {
                    coeff: *coeff,
                    observable: ObsJson { vars, matrix: rows },
                }
            })
            .collect();
        serde_json::to_string_pretty(&ExprJson {
            constant: self.constant,
            terms,
        })
        .expect("runtime expressions serialize")
    }
}
