//! Command-line interface.
//!
//! Exit codes: 0 success (or verified invariant), 2 validation error,
//! 3 non-convergence (or an `unknown` invariant verdict), 4 failed checks
//! (refuted invariant, failed case-study verification).
//!
//! The environment variable `QERT_SEED` overrides `--seed` everywhere.

use crate::bb84;
use crate::ert::{
    check_invariant, ert_affine, ert_backward, ert_forward, CheckMode, CheckOptions, CostModel,
    ErtOptions, InvariantStatus, RuntimeExpr,
};
use crate::frontend::{elaborate, parse, Diagnostic, ElaboratedProgram, Ir, Severity};
use crate::operators::{CMatrix, MeasurementSet, Pdm};
use crate::report::{
    matrix_rows, AnalysisReport, Bb84Report, EstimateReport, EvaluatorReport, InvariantReport,
    ProgramInfo, Timing,
};
use crate::tolerances::Tolerances;
use crate::trajectory::{estimate, TrajectoryConfig};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "qert",
    version,
    about = "Expected-runtime analysis and simulation for quantum while-programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the runtime evaluators on a program.
    Analyze {
        program: PathBuf,
        /// Initial state: `zero`, a basis ket `|d1,d2,...>`, or a JSON file.
        #[arg(long, default_value = "zero")]
        state: String,
        /// Cost model JSON file (defaults to the unit model).
        #[arg(long)]
        cost: Option<PathBuf>,
        /// Evaluators to run: both | backward | forward | affine.
        #[arg(long, default_value = "both")]
        mode: String,
        /// Loop convergence threshold.
        #[arg(long, default_value_t = 1e-10)]
        epsilon: f64,
        /// Loop unrolling cap.
        #[arg(long, default_value_t = 10_000)]
        max_unroll: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a runtime invariant against a loop.
    CheckInvariant {
        program: PathBuf,
        /// Invariant JSON file.
        #[arg(long)]
        invariant: PathBuf,
        #[arg(long)]
        cost: Option<PathBuf>,
        /// exact | sample.
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Which loop to target (preorder index).
        #[arg(long, default_value_t = 0)]
        r#loop: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate the expected runtime by Monte Carlo trajectory sampling.
    Simulate {
        program: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
        #[arg(long)]
        cost: Option<PathBuf>,
        #[arg(long, default_value = "zero")]
        state: String,
        /// Write the cost histogram as CSV to this path.
        #[arg(long)]
        histogram_csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Build and cross-verify the BB84 case study.
    Bb84 {
        /// Key length.
        #[arg(long)]
        m: usize,
        /// Counter dimension (must exceed the key length).
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        cost: Option<PathBuf>,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
        /// Print the generated program source and exit.
        #[arg(long)]
        emit_source: bool,
        /// Print the loop invariant (JSON) and exit.
        #[arg(long)]
        emit_invariant: bool,
    },
    /// Parse a program and dump its AST as JSON.
    Parse { program: PathBuf },
}

struct Failure {
    code: i32,
    diagnostic: Diagnostic,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            diagnostic: Diagnostic {
                severity: Severity::Error,
                line: 0,
                col: 0,
                code: "E200".into(),
                message: message.into(),
            },
        }
    }

    fn from_diag(diagnostic: Diagnostic) -> Self {
        Self {
            code: 2,
            diagnostic,
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!(
                "{}",
                serde_json::to_string(&f.diagnostic).expect("diagnostics serialize")
            );
            f.code
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Ok(env) = std::env::var("QERT_SEED") {
        return env
            .parse::<u64>()
            .map_err(|_| Failure::validation(format!("QERT_SEED is not an integer: `{env}`")));
    }
    Ok(flag.unwrap_or(0))
}

fn load_program(path: &Path) -> Result<ElaboratedProgram, Failure> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
    let ast = parse(&src).map_err(Failure::from_diag)?;
    elaborate(&ast, &Tolerances::default()).map_err(Failure::from_diag)
}

fn load_cost(path: &Option<PathBuf>) -> Result<CostModel, Failure> {
    match path {
        None => Ok(CostModel::unit()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::validation(format!("cannot read {}: {e}", p.display())))?;
            CostModel::from_json(&text).map_err(|e| Failure::validation(e.to_string()))
        }
    }
}

fn load_state(spec: &str, program: &ElaboratedProgram) -> Result<Pdm, Failure> {
    let layout = program.layout.clone();
    if spec == "zero" {
        return Ok(Pdm::all_zero(layout));
    }
    if let Some(inner) = spec.strip_prefix('|').and_then(|s| s.strip_suffix('>')) {
        let digits: Result<Vec<usize>, _> = inner.split(',').map(|d| d.trim().parse()).collect();
        let digits =
            digits.map_err(|_| Failure::validation(format!("bad basis ket `{spec}`")))?;
        return Pdm::basis_state(layout, &digits).map_err(|e| Failure::validation(e.to_string()));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Failure::validation(format!("cannot read state `{spec}`: {e}")))?;
    #[derive(serde::Deserialize)]
    struct StateJson {
        matrix: Vec<Vec<(f64, f64)>>,
    }
    let parsed: StateJson = serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("bad state file `{spec}`: {e}")))?;
    let n = parsed.matrix.len();
    if parsed.matrix.iter().any(|r| r.len() != n) {
        return Err(Failure::validation("state matrix is not square".to_string()));
    }
    let m = CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(parsed.matrix[i][j].0, parsed.matrix[i][j].1)
    });
    Pdm::from_matrix(layout, m, &Tolerances::default())
        .map_err(|e| Failure::validation(e.to_string()))
}

fn program_info(path: &Path, program: &ElaboratedProgram) -> ProgramInfo {
    ProgramInfo {
        path: path.display().to_string(),
        hash: program.fingerprint(),
        variables: program
            .layout
            .vars()
            .map(|(n, d)| (n.to_string(), d))
            .collect(),
        total_dim: program.layout.total_dim(),
        sugar_expansions: program.sugar_expansions.clone(),
    }
}

fn loops_of(ir: &Ir, out: &mut Vec<(Arc<MeasurementSet>, Ir)>) {
    match ir {
        Ir::While { mset, body, .. } => {
            out.push((mset.clone(), (**body).clone()));
            loops_of(body, out);
        }
        Ir::Seq(items) => items.iter().for_each(|i| loops_of(i, out)),
        Ir::Case { branches, .. } => branches.iter().for_each(|(_, b)| loops_of(b, out)),
        _ => {}
    }
}

fn contains_loop(ir: &Ir) -> bool {
    match ir {
        Ir::While { .. } => true,
        Ir::Seq(items) => items.iter().any(contains_loop),
        Ir::Case { branches, .. } => branches.iter().any(|(_, b)| contains_loop(b)),
        _ => false,
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Analyze {
            program,
            state,
            cost,
            mode,
            epsilon,
            max_unroll,
            json,
            seed,
        } => cmd_analyze(
            &program, &state, &cost, &mode, epsilon, max_unroll, json, seed,
        ),
        Command::CheckInvariant {
            program,
            invariant,
            cost,
            mode,
            r#loop,
            json,
            seed,
        } => cmd_check_invariant(&program, &invariant, &cost, &mode, r#loop, json, seed),
        Command::Simulate {
            program,
            trials,
            seed,
            max_steps,
            cost,
            state,
            histogram_csv,
            json,
        } => cmd_simulate(
            &program,
            trials,
            seed,
            max_steps,
            &cost,
            &state,
            &histogram_csv,
            json,
        ),
        Command::Bb84 {
            m,
            dim,
            cost,
            trials,
            seed,
            json,
            emit_source,
            emit_invariant,
        } => cmd_bb84(
            m,
            dim,
            &cost,
            trials,
            seed,
            json,
            emit_source,
            emit_invariant,
        ),
        Command::Parse { program } => cmd_parse(&program),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    path: &Path,
    state: &str,
    cost_path: &Option<PathBuf>,
    mode: &str,
    epsilon: f64,
    max_unroll: usize,
    json: bool,
    seed: Option<u64>,
) -> Result<i32, Failure> {
    let started = Instant::now();
    let seed = resolve_seed(seed)?;
    let program = load_program(path)?;
    let cost = load_cost(cost_path)?;
    let rho = load_state(state, &program)?;
    let opts = ErtOptions {
        epsilon_value: epsilon,
        max_unroll,
    };
    let zero = RuntimeExpr::zero();

    let mut report = AnalysisReport::new(
        "analyze",
        seed,
        program_info(path, &program),
        cost.fingerprint(),
    );
    report.state = state.to_string();

    let run_backward = matches!(mode, "both" | "backward");
    let run_forward = matches!(mode, "both" | "forward");
    let run_affine = mode == "affine";
    if !(run_backward || run_forward || run_affine) {
        return Err(Failure::validation(format!(
            "unknown mode `{mode}` (use both | backward | forward | affine)"
        )));
    }

    let mut converged = true;
    if run_backward {
        let b = ert_backward(&program, &zero, &rho, &cost, &opts)
            .map_err(|e| Failure::validation(e.to_string()))?;
        converged &= b.converged;
        report.backward = Some(EvaluatorReport::from(&b));
    }
    if run_forward {
        let f = ert_forward(&program, &rho, &zero, &cost, &opts)
            .map_err(|e| Failure::validation(e.to_string()))?;
        converged &= f.converged;
        report.forward = Some(EvaluatorReport::from(&f));
    }
    if let (Some(b), Some(f)) = (&report.backward, &report.forward) {
        report.difference = Some((b.value - f.value).abs());
    }
    if run_affine {
        let expr = ert_affine(&program, &zero, &cost)
            .map_err(|e| Failure::validation(e.to_string()))?;
        report.affine_value = Some(expr.evaluate(&rho));
    }
    report.timing = Timing {
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    if json {
        println!("{}", report.to_json());
    } else {
        if let Some(b) = &report.backward {
            println!(
                "backward: {}{}",
                b.value,
                if b.lower_bound { " (lower bound)" } else { "" }
            );
        }
        if let Some(f) = &report.forward {
            println!(
                "forward:  {}{}",
                f.value,
                if f.lower_bound { " (lower bound)" } else { "" }
            );
        }
        if let Some(a) = report.affine_value {
            println!("affine:   {a}");
        }
        if let Some(d) = report.difference {
            println!("difference: {d:e}");
        }
        if !converged {
            println!("warning: a loop hit the unroll cap; values are lower bounds");
        }
    }
    Ok(if converged { 0 } else { 3 })
}

fn cmd_check_invariant(
    path: &Path,
    invariant: &Path,
    cost_path: &Option<PathBuf>,
    mode: &str,
    loop_index: usize,
    json: bool,
    seed: Option<u64>,
) -> Result<i32, Failure> {
    let started = Instant::now();
    let seed = resolve_seed(seed)?;
    let program = load_program(path)?;
    let cost = load_cost(cost_path)?;
    let inv_text = std::fs::read_to_string(invariant)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", invariant.display())))?;
    let inv = RuntimeExpr::from_json(&inv_text, &program.layout, 1e-8)
        .map_err(|e| Failure::validation(e.to_string()))?;

    let mut loops = Vec::new();
    loops_of(&program.ir, &mut loops);
    let (mset, body) = loops.get(loop_index).ok_or_else(|| {
        Failure::validation(format!(
            "program has {} loop(s); --loop {loop_index} is out of range",
            loops.len()
        ))
    })?;

    let mut requested = match mode {
        "exact" => CheckMode::Exact,
        "sample" => CheckMode::Sample,
        other => {
            return Err(Failure::validation(format!(
                "unknown mode `{other}` (use exact | sample)"
            )))
        }
    };
    let mut downgraded = false;
    if requested == CheckMode::Exact && contains_loop(body) {
        requested = CheckMode::Sample;
        downgraded = true;
    }

    let mut opts = CheckOptions::default();
    opts.battery.seed = seed;
    let verdict = check_invariant(
        mset,
        body,
        &RuntimeExpr::zero(),
        &inv,
        requested,
        &cost,
        &program.layout,
        &opts,
    )
    .map_err(|e| Failure::validation(e.to_string()))?;

    let mut report = AnalysisReport::new(
        "check-invariant",
        seed,
        program_info(path, &program),
        cost.fingerprint(),
    );
    report.invariant = Some(InvariantReport {
        status: verdict.status,
        margin: verdict.margin,
        witness: verdict.witness.as_ref().map(|w| matrix_rows(w.matrix())),
    });
    report.timing = Timing {
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    if json {
        println!("{}", report.to_json());
    } else {
        if downgraded {
            println!("warning: loop body contains a loop; exact mode downgraded to sample");
        }
        match verdict.status {
            InvariantStatus::Verified => println!("verified (margin {:e})", verdict.margin),
            InvariantStatus::Unknown => println!(
                "unknown (no violation on the battery; margin {:e})",
                verdict.margin
            ),
            InvariantStatus::Refuted => {
                println!("refuted (margin {:e})", verdict.margin);
                if let Some(w) = &verdict.witness {
                    println!(
                        "witness: {}",
                        serde_json::to_string(&matrix_rows(w.matrix()))
                            .expect("matrices serialize")
                    );
                }
            }
        }
    }
    Ok(match verdict.status {
        InvariantStatus::Verified => 0,
        InvariantStatus::Unknown => 3,
        InvariantStatus::Refuted => 4,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &Path,
    trials: u64,
    seed: Option<u64>,
    max_steps: u64,
    cost_path: &Option<PathBuf>,
    state: &str,
    histogram_csv: &Option<PathBuf>,
    json: bool,
) -> Result<i32, Failure> {
    let started = Instant::now();
    let seed = resolve_seed(seed)?;
    let program = load_program(path)?;
    let cost = load_cost(cost_path)?;
    let rho = load_state(state, &program)?;
    let config = TrajectoryConfig {
        trials,
        seed,
        max_steps,
    };
    let est = estimate(&program, &rho, &config, &cost)
        .map_err(|e| Failure::validation(e.to_string()))?;

    if let Some(csv_path) = histogram_csv {
        std::fs::write(csv_path, est.histogram_csv())
            .map_err(|e| Failure::validation(format!("cannot write CSV: {e}")))?;
    }

    let mut report = AnalysisReport::new(
        "simulate",
        seed,
        program_info(path, &program),
        cost.fingerprint(),
    );
    report.state = state.to_string();
    report.estimate = Some(EstimateReport::from(&est));
    report.timing = Timing {
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    if json {
        println!("{}", report.to_json());
    } else {
        println!(
            "mean {} ± {} ({} trials, {} truncated)",
            est.mean, est.std_error, est.trials, est.truncated_trials
        );
        if est.truncated_trials > 0 {
            println!(
                "warning: {} trial(s) hit --max-steps; the mean is a lower bound",
                est.truncated_trials
            );
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bb84(
    m: usize,
    dim: usize,
    cost_path: &Option<PathBuf>,
    trials: u64,
    seed: Option<u64>,
    json: bool,
    emit_source: bool,
    emit_invariant: bool,
) -> Result<i32, Failure> {
    let started = Instant::now();
    let seed = resolve_seed(seed)?;
    let cost = load_cost(cost_path)?;
    if emit_source {
        let src = bb84::source(m, dim).map_err(|e| Failure::validation(e.to_string()))?;
        print!("{src}");
        return Ok(0);
    }
    let instance = bb84::build(m, dim).map_err(|e| Failure::validation(e.to_string()))?;
    if emit_invariant {
        let inv = bb84::appendix_invariant(&instance, &cost)
            .map_err(|e| Failure::validation(e.to_string()))?;
        println!("{}", inv.to_json(&instance.program.layout));
        return Ok(0);
    }
    let opts = bb84::VerifyOptions {
        trajectory: TrajectoryConfig {
            trials,
            seed,
            max_steps: 1_000_000,
        },
        ..Default::default()
    };
    let report =
        bb84::verify(&instance, &cost, &opts).map_err(|e| Failure::validation(e.to_string()))?;

    let mut out = AnalysisReport::new(
        "bb84",
        seed,
        ProgramInfo {
            path: format!("bb84(m={m}, d={dim})"),
            hash: instance.program.fingerprint(),
            variables: instance
                .program
                .layout
                .vars()
                .map(|(n, d)| (n.to_string(), d))
                .collect(),
            total_dim: instance.program.layout.total_dim(),
            sugar_expansions: instance.program.sugar_expansions.clone(),
        },
        cost.fingerprint(),
    );
    out.bb84 = Some(Bb84Report {
        m,
        d: dim,
        closed_form: report.closed_form,
        t_star: report.t_star,
        t_iteration: report.t_iteration,
        invariant_status: report.invariant_status,
        invariant_margin: report.invariant_margin,
        backward: report.backward,
        forward: report.forward,
        estimate: EstimateReport::from(&report.estimate),
        checks: report.checks.clone(),
        passed: report.passed,
    });
    out.timing = Timing {
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    if json {
        println!("{}", out.to_json());
    } else {
        for check in &report.checks {
            println!(
                "[{}] {}: {}",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.detail
            );
        }
        println!(
            "{}: expected runtime {}",
            if report.passed { "PASS" } else { "FAIL" },
            report.closed_form
        );
    }
    Ok(if report.passed { 0 } else { 4 })
}

fn cmd_parse(path: &Path) -> Result<i32, Failure> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
    let ast = parse(&src).map_err(Failure::from_diag)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&ast).expect("the AST serializes")
    );
    Ok(0)
}
