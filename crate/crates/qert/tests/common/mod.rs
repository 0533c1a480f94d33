//! Shared helpers for the integration suites: a deterministic random
//! program generator (source-level, so the frontend is exercised too) and
//! state utilities.

use qert::ert::{BatteryOptions, CostModel};
use qert::frontend::{elaborate, parse, ElaboratedProgram};
use qert::operators::{CMatrix, Pdm};
use qert::rng::SplitMix64;
use qert::Tolerances;
use std::fmt::Write as _;

pub fn compile(src: &str) -> ElaboratedProgram {
    let ast = parse(src).unwrap_or_else(|e| panic!("parse failed: {e}\n{src}"));
    elaborate(&ast, &Tolerances::default()).unwrap_or_else(|e| panic!("elaborate failed: {e}\n{src}"))
}

fn fmt_matrix(m: &CMatrix) -> String {
    let mut s = String::from("[");
    for i in 0..m.nrows() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push('[');
        for j in 0..m.ncols() {
            if j > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "[{}, {}]", m[(i, j)].re, m[(i, j)].im);
        }
        s.push(']');
    }
    s.push(']');
    s
}

fn random_unitary(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        num_complex::Complex64::new(rng.next_gaussian(), rng.next_gaussian())
    });
    g.qr().q()
}

/// Random measurement as row blocks of a random unitary (always satisfies
/// the normalization condition).
fn random_measurement(dim: usize, blocks: &[usize], rng: &mut SplitMix64) -> Vec<CMatrix> {
    let u = random_unitary(dim, rng);
    let mut out = Vec::new();
    let mut row = 0;
    for &b in blocks {
        let mut m = CMatrix::zeros(dim, dim);
        for r in row..row + b {
            for c in 0..dim {
                m[(r, c)] = u[(r, c)];
            }
        }
        out.push(m);
        row += b;
    }
    out
}

/// A deterministic random program over two qubits `q`, `r`.
///
/// Loop-free programs mix initializations, random defined unitaries and a
/// `case` over a random binary measurement. When `with_loop` is set, the
/// program additionally runs a geometric loop whose body re-prepares `|+>`
/// on the guard variable (continue probability 1/2, so every run
/// terminates almost surely).
pub fn random_program(seed: u64, with_loop: bool) -> String {
    let mut rng = SplitMix64::stream(seed, 91);
    let mut defines = String::new();
    let mut body = String::new();

    let u1 = random_unitary(2, &mut rng);
    let u2 = random_unitary(4, &mut rng);
    let _ = writeln!(defines, "define U1 := matrix {} on 2;", fmt_matrix(&u1));
    let _ = writeln!(defines, "define U2 := matrix {} on 2, 2;", fmt_matrix(&u2));
    let blocks = if rng.next_f64() < 0.5 {
        vec![1usize, 3]
    } else {
        vec![2usize, 2]
    };
    let ms = random_measurement(4, &blocks, &mut rng);
    let _ = writeln!(
        defines,
        "define N := measurement {{ 0: {}, 1: {} }} on 2, 2;",
        fmt_matrix(&ms[0]),
        fmt_matrix(&ms[1])
    );

    let stmts: [&str; 6] = [
        "skip",
        "q := |0>",
        "r := |+>",
        "[q] *= U1",
        "[q, r] *= U2",
        "case N[q, r] of 0 -> [q] *= H; 1 -> skip end",
    ];
    let n = 3 + rng.next_below(4);
    for i in 0..n {
        if i > 0 {
            body.push_str(";\n");
        }
        body.push_str(stmts[rng.next_below(stmts.len())]);
    }
    if with_loop {
        body.push_str(
            ";\nq := |0>;\n[q] *= H;\nwhile M_std[q] = 1 do\n  [r] *= U1;\n  q := |0>;\n  [q] *= H\nod",
        );
    }
    format!("var q : bool;\nvar r : bool;\n{defines}\n{body}\n")
}

/// Twenty-plus converging corpus programs: the shipped files' sources plus
/// generated ones, loop-free and geometric-loop.
#[allow(dead_code)] // each integration suite links its own copy
pub fn corpus() -> Vec<String> {
    let mut programs = vec![
        include_str!("../../../../corpus/skip.qgcl").to_string(),
        include_str!("../../../../corpus/geometric.qgcl").to_string(),
    ];
    for seed in 0..12u64 {
        programs.push(random_program(seed, false));
    }
    for seed in 100..108u64 {
        programs.push(random_program(seed, true));
    }
    programs
}

pub fn battery_of(program: &ElaboratedProgram, n: usize) -> Vec<Pdm> {
    let opts = BatteryOptions::default().with_min_states(n, &program.layout);
    qert::ert::state_battery(&program.layout, &opts)
}

/// Seeded random cost model with nonnegative rational entries, resolving
/// every label through a default.
pub fn random_cost_model(seed: u64) -> CostModel {
    let mut rng = SplitMix64::stream(seed, 7);
    let mut cost = CostModel::zero();
    cost.skip = rng.next_below(17) as f64 / 4.0;
    for label in ["|0>", "|1>", "|+>", "|++>"] {
        cost.init
            .insert(label.into(), rng.next_below(17) as f64 / 4.0);
    }
    for label in ["H", "X", "U1", "U2", "U_P0", "U_P1", "U_succ"] {
        cost.unitary
            .insert(label.into(), rng.next_below(17) as f64 / 4.0);
    }
    for label in ["M_std", "N", "M_m", "M_A", "M_B"] {
        cost.measurement
            .insert(label.into(), rng.next_below(17) as f64 / 4.0);
    }
    cost.default = Some(rng.next_below(17) as f64 / 4.0);
    cost
}
