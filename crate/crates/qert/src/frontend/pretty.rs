//! Canonical pretty-printer. `parse(pretty_print(ast))` reproduces the AST.

use super::ast::*;

pub fn pretty_print(file: &SourceFile) -> String {
    let mut out = String::new();
    for decl in &file.decls {
        decl_to(&mut out, decl);
        out.push('\n');
    }
    if !file.decls.is_empty() {
        out.push('\n');
    }
    stmt_to(&mut out, &file.body, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn decl_to(out: &mut String, decl: &Decl) {
    match &decl.kind {
        DeclKind::Var { name, ty } => match ty {
            VarType::Bool => out.push_str(&format!("var {name} : bool;")),
            VarType::Int(d) => out.push_str(&format!("var {name} : int[{d}];")),
        },
        DeclKind::Define { name, def } => {
            out.push_str(&format!("define {name} := "));
            match def {
                OperatorDefExpr::Matrix { rows, dims } => {
                    out.push_str("matrix ");
                    matrix_to(out, rows);
                    out.push_str(&format!(" on {}", dims_to(dims)));
                }
                OperatorDefExpr::Measurement { outcomes, dims } => {
                    out.push_str("measurement { ");
                    for (i, (id, rows)) in outcomes.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&format!("{id}: "));
                        matrix_to(out, rows);
                    }
                    out.push_str(&format!(" }} on {}", dims_to(dims)));
                }
                OperatorDefExpr::Builtin { name, args } => {
                    out.push_str(&format!("builtin {name}"));
                    if !args.is_empty() {
                        let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                        out.push_str(&format!("({})", args.join(", ")));
                    }
                }
            }
            out.push(';');
        }
    }
}

fn dims_to(dims: &[usize]) -> String {
    dims.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn matrix_to(out: &mut String, rows: &[Vec<(f64, f64)>]) {
    out.push('[');
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for (j, (re, im)) in row.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!("[{}, {}]", fmt_num(*re), fmt_num(*im)));
        }
        out.push(']');
    }
    out.push(']');
}

/// Numbers print in a form the lexer accepts: no bare `-0`, exponents only
/// through the `e` notation Rust's shortest formatting emits.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        // normalize -0.0
        return "0".into();
    }
    format!("{v}")
}

fn stmt_to(out: &mut String, stmt: &Stmt, level: usize) {
    match &stmt.kind {
        StmtKind::Skip => {
            indent(out, level);
            out.push_str("skip");
        }
        StmtKind::InitKet { targets, ket } => {
            indent(out, level);
            if targets.len() == 1 {
                out.push_str(&format!("{} := {}", targets[0], ket_label(ket)));
            } else {
                out.push_str(&format!("[{}] := {}", targets.join(", "), ket_label(ket)));
            }
        }
        StmtKind::Unitary { label, targets } => {
            indent(out, level);
            out.push_str(&format!("[{}] *= {label}", targets.join(", ")));
        }
        StmtKind::Seq(a, b) => {
            stmt_to(out, a, level);
            out.push_str(";\n");
            stmt_to(out, b, level);
        }
        StmtKind::Case {
            label,
            targets,
            branches,
        } => {
            indent(out, level);
            out.push_str(&format!("case {label}[{}] of\n", targets.join(", ")));
            for (i, (id, body)) in branches.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&format!("{id} ->\n"));
                stmt_to(out, body, level + 2);
                if i + 1 < branches.len() {
                    out.push(';');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push_str("end");
        }
        StmtKind::While {
            label,
            targets,
            body,
        } => {
            indent(out, level);
            out.push_str(&format!("while {label}[{}] = 1 do\n", targets.join(", ")));
            stmt_to(out, body, level + 1);
            out.push('\n');
            indent(out, level);
            out.push_str("od");
        }
    }
}
