//! Acceptance suite: one test per release criterion. Run with
//! `cargo test --test acceptance -- --nocapture` to see the per-criterion
//! lines.

mod common;

use common::{battery_of, compile, corpus, random_cost_model};
use qert::bb84;
use qert::ert::{
    check_invariant, ert_affine, ert_backward, ert_backward_ir, ert_forward, ert_of_program,
    BatteryOptions, CheckMode, CheckOptions, CostModel, ErtOptions, InvariantStatus, RuntimeExpr,
};
use qert::frontend::Ir;
use qert::operators::{CMatrix, Observable, Pdm};
use qert::semantics::{eval, SemanticsOptions};
use qert::trajectory::{estimate, TrajectoryConfig};
use qert::Tolerances;
use rayon::prelude::*;
use std::time::Instant;

fn pass(n: u32, name: &str, detail: String) {
    println!("criterion {n} ({name}): PASS — {detail}");
}

/// 1. Closed-form reproduction: for m in {1,2,3}, d = m+2, unit costs, both
///    evaluators return 2 + 13m within 1e-6, each instance under 60 s.
#[test]
fn criterion_1_bb84_closed_form() {
    let mut details = Vec::new();
    for m in 1usize..=3 {
        let d = m + 2;
        let started = Instant::now();
        let inst = bb84::build(m, d).unwrap();
        let cost = CostModel::unit();
        let expected = 2.0 + 13.0 * m as f64;
        assert!((bb84::closed_form(m, &cost).unwrap() - expected).abs() < 1e-12);
        let rho = Pdm::all_zero(inst.program.layout.clone());
        let r = ert_of_program(&inst.program, &rho, &cost, &ErtOptions::default()).unwrap();
        assert!(r.backward.converged && r.forward.converged);
        assert!(
            (r.backward.value - expected).abs() < 1e-6,
            "m={m}: backward {} vs {expected}",
            r.backward.value
        );
        assert!(
            (r.forward.value - expected).abs() < 1e-6,
            "m={m}: forward {} vs {expected}",
            r.forward.value
        );
        let elapsed = started.elapsed();
        assert!(
            elapsed.as_secs() < 60,
            "m={m} took {elapsed:?}, budget is 60 s"
        );
        details.push(format!("m={m}: {} in {elapsed:.2?}", r.backward.value));
    }
    pass(1, "bb84 closed form", details.join("; "));
}

/// 2. The loop invariant is an exact fixed point: the exact checker returns
///    `verified` with |margin| < 1e-8 for unit costs and 5 seeded random
///    cost models, at m=1 and m=2.
#[test]
fn criterion_2_appendix_fixed_point() {
    let mut models = vec![("unit".to_string(), CostModel::unit())];
    for seed in 1..=5u64 {
        models.push((format!("random-{seed}"), random_cost_model(seed)));
    }
    let mut checked = 0;
    for (m, d) in [(1usize, 3usize), (2, 4)] {
        let inst = bb84::build(m, d).unwrap();
        let (mset, body) = inst.main_loop();
        for (name, cost) in &models {
            let inv = bb84::appendix_invariant(&inst, cost).unwrap();
            let verdict = check_invariant(
                mset,
                body,
                &RuntimeExpr::zero(),
                &inv,
                CheckMode::Exact,
                cost,
                &inst.program.layout,
                &CheckOptions::default(),
            )
            .unwrap();
            assert_eq!(
                verdict.status,
                InvariantStatus::Verified,
                "m={m} cost={name}: {:?}",
                verdict
            );
            assert!(
                verdict.margin.abs() < 1e-8,
                "m={m} cost={name}: margin {}",
                verdict.margin
            );
            checked += 1;
        }
    }
    pass(
        2,
        "appendix fixed point",
        format!("{checked} (m, cost-model) pairs verified with |margin| < 1e-8"),
    );
}

/// 3. Evaluator concordance: |backward - forward| < 1e-7 on a 20+ program
///    corpus; |affine - backward| < 1e-9 on loop-free programs across a
///    200-state battery.
#[test]
fn criterion_3_evaluator_concordance() {
    let programs = corpus();
    assert!(programs.len() >= 20, "corpus has {}", programs.len());
    let cost = CostModel::unit();
    let opts = ErtOptions::default();
    let zero = RuntimeExpr::zero();
    let mut loop_free = 0;
    let mut pairwise = 0;
    for src in &programs {
        let p = compile(src);
        let rho = Pdm::all_zero(p.layout.clone());
        let b = ert_backward(&p, &zero, &rho, &cost, &opts).unwrap();
        let f = ert_forward(&p, &rho, &zero, &cost, &opts).unwrap();
        assert!(b.converged && f.converged, "corpus programs converge");
        assert!(
            (b.value - f.value).abs() < 1e-7,
            "backward {} vs forward {}\n{src}",
            b.value,
            f.value
        );
        pairwise += 1;
        if let Ok(affine) = ert_affine(&p, &zero, &cost) {
            loop_free += 1;
            let battery = battery_of(&p, 200);
            assert!(battery.len() >= 200);
            for rho in &battery {
                let via_affine = affine.evaluate(rho);
                let via_backward = ert_backward(&p, &zero, rho, &cost, &opts).unwrap().value;
                assert!(
                    (via_affine - via_backward).abs() < 1e-9,
                    "affine {via_affine} vs backward {via_backward}\n{src}"
                );
            }
        }
    }
    assert!(loop_free >= 10);
    pass(
        3,
        "evaluator concordance",
        format!("{pairwise} programs backward/forward < 1e-7; {loop_free} loop-free programs affine < 1e-9 on 200-state batteries"),
    );
}

/// 4. Monte Carlo concordance: BB84 m=2 with 1e5 trajectories at seed 42 is
///    within 3 standard errors of 28; the geometric loop within 3σ of 6.
#[test]
fn criterion_4_monte_carlo_concordance() {
    let inst = bb84::build(2, 4).unwrap();
    let rho = Pdm::all_zero(inst.program.layout.clone());
    let cfg = TrajectoryConfig {
        trials: 100_000,
        seed: 42,
        max_steps: 1_000_000,
    };
    let est = estimate(&inst.program, &rho, &cfg, &CostModel::unit()).unwrap();
    assert_eq!(est.truncated_trials, 0);
    assert!(
        (est.mean - 28.0).abs() <= 3.0 * est.std_error,
        "mean {} ± {} vs 28",
        est.mean,
        est.std_error
    );

    let geo = compile(include_str!("../../../corpus/geometric.qgcl"));
    let rho = Pdm::all_zero(geo.layout.clone());
    let est_geo = estimate(&geo, &rho, &cfg, &CostModel::unit()).unwrap();
    assert!(
        (est_geo.mean - 6.0).abs() <= 3.0 * est_geo.std_error,
        "geometric mean {} ± {}",
        est_geo.mean,
        est_geo.std_error
    );
    pass(
        4,
        "monte carlo concordance",
        format!(
            "bb84 m=2: {} ± {}; geometric: {} ± {}",
            est.mean, est.std_error, est_geo.mean, est_geo.std_error
        ),
    );
}

/// 5. Semantics properties on 500 seeded random (program, state) pairs:
///    trace non-increase, PSD preservation of every intermediate state, and
///    linearity at matched loop iteration counts.
#[test]
fn criterion_5_semantics_properties() {
    let mut programs = Vec::new();
    for seed in 200..220u64 {
        programs.push(compile(&common::random_program(seed, false)));
        programs.push(compile(&common::random_program(seed, true)));
    }
    // fixed iteration counts so linear combinations see identical loop work
    let opts = SemanticsOptions {
        epsilon_mass: 1e-300,
        max_iterations: 50,
        validate: Some(Tolerances::default()),
    };
    let mut pairs = 0;
    let mut rng = qert::rng::SplitMix64::new(2025);
    'outer: for round in 0..13 {
        for p in &programs {
            let rho1 = qert::ert::random_mixed(&p.layout, &mut rng);
            let rho2 = qert::ert::random_pure(&p.layout, &mut rng);
            let (a, b) = (0.25 + 0.5 * rng.next_f64(), 0.2 * rng.next_f64());
            let combo = Pdm::from_matrix_unchecked(
                p.layout.clone(),
                rho1.matrix().scale(a) + rho2.matrix().scale(b),
            );
            // validate=Some(...) checks PSD/Hermiticity/trace of every
            // intermediate state inside eval
            let r1 = eval(p, &rho1, &opts).unwrap();
            let r2 = eval(p, &rho2, &opts).unwrap();
            let rc = eval(p, &combo, &opts).unwrap();
            assert!(r1.state.trace() <= rho1.trace() + 1e-9);
            assert!(r2.state.trace() <= rho2.trace() + 1e-9);
            assert!(rc.state.trace() <= combo.trace() + 1e-9);
            let lin = r1.state.matrix().scale(a) + r2.state.matrix().scale(b);
            let defect = (rc.state.matrix() - lin)
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            assert!(defect < 1e-9, "linearity defect {defect} in round {round}");
            pairs += 3;
            if pairs >= 500 {
                break 'outer;
            }
        }
    }
    assert!(pairs >= 500);
    pass(
        5,
        "semantics properties",
        format!("{pairs} evaluations: trace non-increase, PSD intermediates, linearity < 1e-9"),
    );
}

/// 6. Park-rule soundness: every invariant the exact checker verifies here
///    bounds the loop's backward runtime on the full state battery.
#[test]
fn criterion_6_park_soundness() {
    struct Case {
        name: &'static str,
        program: qert::frontend::ElaboratedProgram,
        inv: RuntimeExpr,
        cost: CostModel,
    }
    let geometric = compile(include_str!("../../../corpus/geometric.qgcl"));
    let geo_inv = |constant: f64| {
        let mut m = CMatrix::zeros(2, 2);
        m[(1, 1)] = num_complex::Complex64::new(1.0, 0.0);
        let q = geometric.layout.index_of("q").unwrap();
        let obs = Observable::from_subspace(geometric.layout.clone(), &[q], &m, 1e-8).unwrap();
        RuntimeExpr::new(constant, vec![(6.0, obs)])
    };
    let bb84_unit = bb84::build(1, 3).unwrap();
    let bb84_rand_cost = {
        let mut c = random_cost_model(11);
        c.default = Some(0.75);
        c
    };
    let cases = vec![
        Case {
            name: "geometric fixed point",
            program: geometric.clone(),
            inv: geo_inv(1.0),
            cost: CostModel::unit(),
        },
        Case {
            name: "geometric fixed point + 1",
            program: geometric.clone(),
            inv: geo_inv(2.0),
            cost: CostModel::unit(),
        },
        Case {
            name: "bb84 m=1 unit costs",
            program: bb84_unit.program.clone(),
            inv: bb84::appendix_invariant(&bb84_unit, &CostModel::unit()).unwrap(),
            cost: CostModel::unit(),
        },
        Case {
            name: "bb84 m=1 random costs",
            program: bb84_unit.program.clone(),
            inv: bb84::appendix_invariant(&bb84_unit, &bb84_rand_cost).unwrap(),
            cost: bb84_rand_cost,
        },
    ];

    let mut details = Vec::new();
    for case in &cases {
        let (mset, body) = bb84::find_loop(&case.program.ir).expect("case has a loop");
        let verdict = check_invariant(
            mset,
            body,
            &RuntimeExpr::zero(),
            &case.inv,
            CheckMode::Exact,
            &case.cost,
            &case.program.layout,
            &CheckOptions::default(),
        )
        .unwrap();
        assert_eq!(
            verdict.status,
            InvariantStatus::Verified,
            "{}: {verdict:?}",
            case.name
        );
        // spot check the Park consequence on the full battery
        let battery = qert::ert::state_battery(&case.program.layout, &BatteryOptions::default());
        let loop_ir = Ir::While {
            mset: mset.clone(),
            body: Box::new(body.clone()),
            loop_id: 0,
        };
        let worst = battery
            .par_iter()
            .map(|rho| {
                let value = ert_backward_ir(
                    &loop_ir,
                    &RuntimeExpr::zero(),
                    rho,
                    &case.cost,
                    &ErtOptions::default(),
                )
                .unwrap()
                .value;
                value - case.inv.evaluate(rho)
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        assert!(
            worst <= 1e-6,
            "{}: ert exceeds the invariant by {worst}",
            case.name
        );
        details.push(format!(
            "{}: {} states, max(ert - I) = {:.2e}",
            case.name,
            battery.len(),
            worst
        ));
    }
    pass(6, "park soundness", details.join("; "));
}

/// 7. Frontend: the case-study corpus file round-trips through the
///    pretty-printer, and all six elaboration error classes produce their
///    golden diagnostics.
#[test]
fn criterion_7_frontend() {
    use qert::frontend::{parse, pretty_print};
    let src = include_str!("../../../corpus/bb84_m3_d8.qgcl");
    let ast = parse(src).unwrap();
    let printed = pretty_print(&ast);
    let reparsed = parse(&printed).unwrap();
    assert_eq!(ast, reparsed, "round trip changed the AST");
    // the shipped file is already canonical
    assert_eq!(src, printed, "corpus file is in canonical form");

    let golden: Vec<(&str, &str, serde_json::Value)> = vec![
        (
            "undeclared variable",
            "q := |0>",
            serde_json::json!({
                "severity": "error", "line": 1, "col": 1, "code": "E101",
                "message": "variable `q` is not declared"
            }),
        ),
        (
            "duplicate declaration",
            "var q : bool; var q : bool; skip",
            serde_json::json!({
                "severity": "error", "line": 1, "col": 15, "code": "E102",
                "message": "`q` is declared twice"
            }),
        ),
        (
            "dimension mismatch",
            "var k : int[3]; [k] *= H",
            serde_json::json!({
                "severity": "error", "line": 1, "col": 17, "code": "E103",
                "message": "builtin `H` acts on dimension 2, but the targets have dimension 3"
            }),
        ),
        (
            "normalization failure",
            "var q : bool; define M := measurement { 0: [[[1,0],[0,0]],[[0,0],[0,0]]] } on 2; case M[q] of 0 -> skip end",
            serde_json::json!({
                "severity": "error", "line": 1, "col": 82, "code": "E104",
                "message": "`M` violates normalization: max |ΣM†M - I| = 1.000e0"
            }),
        ),
        (
            "incomplete case",
            "var q : bool; case M_std[q] of 0 -> skip end",
            serde_json::json!({
                "severity": "error", "line": 1, "col": 15, "code": "E105",
                "message": "case over `M_std` must cover outcomes [0, 1] exactly once, got [0]"
            }),
        ),
        (
            "unknown operator",
            "var q : bool; [q] *= Mystery",
            serde_json::json!({
                "severity": "error", "line": 1, "col": 15, "code": "E106",
                "message": "no definition or builtin named `Mystery`"
            }),
        ),
    ];
    for (name, src, expected) in &golden {
        let err = parse(src)
            .and_then(|ast| qert::frontend::elaborate(&ast, &Tolerances::default()))
            .expect_err(name);
        let got = serde_json::to_value(&err).unwrap();
        assert_eq!(&got, expected, "golden diagnostic for {name}");
    }
    pass(
        7,
        "frontend",
        format!(
            "bb84 corpus file round-trips ({} bytes canonical); 6 golden diagnostics match",
            src.len()
        ),
    );
}

/// 8. Determinism: fixed QERT_SEED gives byte-identical JSON reports
///    (timing excluded).
#[test]
fn criterion_8_determinism() {
    let bin = env!("CARGO_BIN_EXE_qert");
    let root: std::path::PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", ".."].iter().collect();
    let strip_timing = |raw: &[u8]| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_slice(raw).expect("json output");
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    let run = |args: &[&str]| {
        let out = std::process::Command::new(bin)
            .args(args)
            .env("QERT_SEED", "123")
            .current_dir(&root)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let mut compared = 0;
    for args in [
        vec!["analyze", "corpus/geometric.qgcl", "--json"],
        vec![
            "simulate",
            "corpus/geometric.qgcl",
            "--trials",
            "2000",
            "--json",
        ],
        vec!["bb84", "--m", "1", "--dim", "3", "--trials", "2000", "--json"],
        vec![
            "check-invariant",
            "corpus/geometric.qgcl",
            "--invariant",
            "corpus/geometric_invariant.json",
            "--json",
        ],
    ] {
        let a = strip_timing(&run(&args));
        let b = strip_timing(&run(&args));
        let a_bytes = serde_json::to_vec(&a).unwrap();
        let b_bytes = serde_json::to_vec(&b).unwrap();
        assert_eq!(a_bytes, b_bytes, "{args:?} differs across runs");
        compared += 1;
    }
    pass(
        8,
        "determinism",
        format!("{compared} commands byte-identical across repeated runs (timing excluded)"),
    );
}
