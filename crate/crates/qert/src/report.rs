//! JSON report schema (versioned).

use crate::bb84::CheckResult;
use crate::ert::{ErtValue, ForwardValue, LoopUnroll};
use crate::semantics::LoopStats;
use crate::trajectory::RuntimeEstimate;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: "qert",
            version: crate::VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgramInfo {
    pub path: String,
    pub hash: String,
    pub variables: Vec<(String, usize)>,
    pub total_dim: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sugar_expansions: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluatorReport {
    pub value: f64,
    pub converged: bool,
    pub lower_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_mass: Option<f64>,
    pub loops: Vec<LoopUnroll>,
}

impl From<&ErtValue> for EvaluatorReport {
    fn from(v: &ErtValue) -> Self {
        Self {
            value: v.value,
            converged: v.converged,
            lower_bound: v.lower_bound,
            residual_mass: None,
            loops: v.loops.clone(),
        }
    }
}

impl From<&ForwardValue> for EvaluatorReport {
    fn from(v: &ForwardValue) -> Self {
        Self {
            value: v.value,
            converged: v.converged,
            lower_bound: v.lower_bound,
            residual_mass: Some(v.residual_mass),
            loops: v.loops.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub truncated_trials: u64,
    pub histogram: Vec<(f64, u64)>,
}

impl From<&RuntimeEstimate> for EstimateReport {
    fn from(e: &RuntimeEstimate) -> Self {
        Self {
            mean: e.mean,
            std_error: e.std_error,
            trials: e.trials,
            truncated_trials: e.truncated_trials,
            histogram: e.histogram_entries(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub status: crate::ert::InvariantStatus,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<(f64, f64)>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_ms: f64,
}

/// Top-level analysis report. Deterministic given (inputs, seed) except for
/// the `timing` block, which consumers must exclude from byte comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub tool: ToolInfo,
    pub command: String,
    pub seed: u64,
    pub program: ProgramInfo,
    pub cost_model_hash: String,
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backward: Option<EvaluatorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward: Option<EvaluatorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affine_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semantics_loops: Option<Vec<LoopStats>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant: Option<InvariantReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bb84: Option<Bb84Report>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bb84Report {
    pub m: usize,
    pub d: usize,
    pub closed_form: f64,
    pub t_star: f64,
    pub t_iteration: f64,
    pub invariant_status: crate::ert::InvariantStatus,
    pub invariant_margin: f64,
    pub backward: f64,
    pub forward: f64,
    pub estimate: EstimateReport,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl AnalysisReport {
    pub fn new(command: &str, seed: u64, program: ProgramInfo, cost_hash: String) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            tool: ToolInfo::default(),
            command: command.to_string(),
            seed,
            program,
            cost_model_hash: cost_hash,
            state: "zero".into(),
            backward: None,
            forward: None,
            affine_value: None,
            difference: None,
            semantics_loops: None,
            invariant: None,
            estimate: None,
            bb84: None,
            timing: Timing { wall_ms: 0.0 },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Serializes a density matrix as row-major complex pairs.
pub fn matrix_rows(m: &crate::operators::CMatrix) -> Vec<Vec<(f64, f64)>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| (m[(i, j)].re, m[(i, j)].im))
                .collect()
        })
        .collect()
}
