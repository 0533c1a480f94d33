//! Static checking and operator resolution.
//!
//! Elaboration resolves variables to layout indices, instantiates operator
//! definitions and builtins at their use sites, validates unitarity /
//! normalization / case coverage / guard shape, and lowers the AST to a
//! flattened IR the engines evaluate directly.

use super::ast::*;
use super::builtins::{builtin, BuiltinError, BuiltinOp};
use super::diagnostics::{codes, Diagnostic};
use crate::operators::{CMatrix, Layout, MeasurementSet, UnitaryOp};
use crate::tolerances::Tolerances;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A resolved operator, as recorded in the program's operator table.
#[derive(Debug, Clone)]
pub enum OperatorDef {
    Unitary(Arc<UnitaryOp>),
    Measurement(Arc<MeasurementSet>),
}

/// One per-variable action of a ket initialization.
#[derive(Debug, Clone)]
pub struct InitStep {
    pub var: usize,
    pub basis: usize,
    /// Present when the ket symbol was `+`: the Hadamard applied after the
    /// basis reset.
    pub hadamard: Option<Arc<UnitaryOp>>,
}

/// Executable form of a statement; labels resolved, targets as layout
/// indices, sequences flattened.
#[derive(Debug, Clone)]
pub enum Ir {
    Skip,
    InitKet {
        steps: Vec<InitStep>,
        /// Cost label: the literal ket text (`|0>`, `|+>`, `|++>`, ...).
        label: String,
    },
    Unitary(Arc<UnitaryOp>),
    Seq(Vec<Ir>),
    Case {
        mset: Arc<MeasurementSet>,
        branches: Vec<(u32, Ir)>,
    },
    While {
        mset: Arc<MeasurementSet>,
        body: Box<Ir>,
        loop_id: usize,
    },
}

/// A fully resolved program.
#[derive(Debug, Clone)]
pub struct ElaboratedProgram {
    pub source: SourceFile,
    pub ir: Ir,
    pub layout: Arc<Layout>,
    pub operators: BTreeMap<String, OperatorDef>,
    /// Human-readable notes about ket sugar that was expanded (`|+>`-style
    /// initializations); surfaced in analysis reports.
    pub sugar_expansions: Vec<String>,
    pub loop_count: usize,
}

impl ElaboratedProgram {
    /// Deterministic fingerprint of the canonical source text (FNV-1a).
    pub fn fingerprint(&self) -> String {
        let text = super::pretty::pretty_print(&self.source);
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100_0000_01b3);
        }
        format!("{hash:016x}")
    }
}

pub fn elaborate(file: &SourceFile, tol: &Tolerances) -> Result<ElaboratedProgram, Diagnostic> {
    let mut ctx = Ctx::new(file, tol)?;
    let ir = ctx.lower(&file.body)?;
    Ok(ElaboratedProgram {
        source: file.clone(),
        ir,
        layout: ctx.layout,
        operators: ctx.table,
        sugar_expansions: ctx.sugar,
        loop_count: ctx.loop_count,
    })
}

/// Pending (unresolved) operator definition.
enum Pending {
    Matrix { rows: MatrixRows, dims: Vec<usize> },
    Measurement { outcomes: Vec<(u32, MatrixRows)>, dims: Vec<usize> },
    Builtin { name: String, args: Vec<usize> },
}

struct Ctx {
    layout: Arc<Layout>,
    defines: BTreeMap<String, (Pending, Span)>,
    table: BTreeMap<String, OperatorDef>,
    sugar: Vec<String>,
    loop_count: usize,
    tol: Tolerances,
}

fn rows_to_matrix(rows: &MatrixRows, span: Span) -> Result<CMatrix, Diagnostic> {
    let n = rows.len();
    for row in rows {
        if row.len() != n {
            return Err(Diagnostic::error(
                span,
                codes::DIMENSION_MISMATCH,
                format!("matrix literal is not square: {n} rows, a row of {} entries", row.len()),
            ));
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j].0, rows[i][j].1)
    }))
}

impl Ctx {
    fn new(file: &SourceFile, tol: &Tolerances) -> Result<Self, Diagnostic> {
        let mut vars: Vec<(String, usize)> = Vec::new();
        let mut defines: BTreeMap<String, (Pending, Span)> = BTreeMap::new();
        let mut seen: Vec<&str> = Vec::new();
        for decl in &file.decls {
            match &decl.kind {
                DeclKind::Var { name, ty } => {
                    if seen.contains(&name.as_str()) {
                        return Err(Diagnostic::error(
                            decl.span,
                            codes::DUPLICATE_DECLARATION,
                            format!("`{name}` is declared twice"),
                        ));
                    }
                    let dim = ty.dim();
                    if dim < 2 {
                        return Err(Diagnostic::error(
                            decl.span,
                            codes::DIMENSION_MISMATCH,
                            format!("variable `{name}` must have dimension >= 2, got {dim}"),
                        ));
                    }
                    seen.push(name);
                    vars.push((name.clone(), dim));
                }
                DeclKind::Define { name, def } => {
                    if seen.contains(&name.as_str()) {
                        return Err(Diagnostic::error(
                            decl.span,
                            codes::DUPLICATE_DECLARATION,
                            format!("`{name}` is declared twice"),
                        ));
                    }
                    seen.push(name);
                    let pending = match def {
                        OperatorDefExpr::Matrix { rows, dims } => Pending::Matrix {
                            rows: rows.clone(),
                            dims: dims.clone(),
                        },
                        OperatorDefExpr::Measurement { outcomes, dims } => Pending::Measurement {
                            outcomes: outcomes.clone(),
                            dims: dims.clone(),
                        },
                        OperatorDefExpr::Builtin { name: bname, args } => Pending::Builtin {
                            name: bname.clone(),
                            args: args.clone(),
                        },
                    };
                    defines.insert(name.clone(), (pending, decl.span));
                }
            }
        }
        let layout = Layout::new(vars).map_err(|e| {
            Diagnostic::error(Span::default(), codes::DIMENSION_MISMATCH, e.to_string())
        })?;
        Ok(Self {
            layout: Arc::new(layout),
            defines,
            table: BTreeMap::new(),
            sugar: Vec::new(),
            loop_count: 0,
            tol: *tol,
        })
    }

    fn resolve_targets(&self, targets: &[String], span: Span) -> Result<Vec<usize>, Diagnostic> {
        let mut out = Vec::with_capacity(targets.len());
        for t in targets {
            let idx = self.layout.index_of(t).ok_or_else(|| {
                Diagnostic::error(
                    span,
                    codes::UNDECLARED_VARIABLE,
                    format!("variable `{t}` is not declared"),
                )
            })?;
            if out.contains(&idx) {
                return Err(Diagnostic::error(
                    span,
                    codes::DIMENSION_MISMATCH,
                    format!("variable `{t}` is listed twice in a target list"),
                ));
            }
            out.push(idx);
        }
        Ok(out)
    }

    fn sub_dim(&self, targets: &[usize]) -> usize {
        targets.iter().map(|&t| self.layout.dim_of(t)).product()
    }

    fn builtin_diag(&self, span: Span, err: BuiltinError) -> Diagnostic {
        let code = match &err {
            BuiltinError::Unknown(_) => codes::UNKNOWN_OPERATOR,
            BuiltinError::Dim { .. } => codes::DIMENSION_MISMATCH,
            _ => codes::DIMENSION_MISMATCH,
        };
        Diagnostic::error(span, code, err.to_string())
    }

    /// Resolves `label` as a unitary on `targets`.
    fn unitary_for(
        &mut self,
        label: &str,
        targets: &[usize],
        span: Span,
    ) -> Result<Arc<UnitaryOp>, Diagnostic> {
        let dim = self.sub_dim(targets);
        let matrix = match self.defines.get(label) {
            Some((Pending::Matrix { rows, dims }, dspan)) => {
                let declared: usize = dims.iter().product();
                let m = rows_to_matrix(rows, *dspan)?;
                if m.nrows() != declared {
                    return Err(Diagnostic::error(
                        *dspan,
                        codes::DIMENSION_MISMATCH,
                        format!(
                            "`{label}`: matrix is {}x{} but `on {:?}` declares dimension {declared}",
                            m.nrows(),
                            m.ncols(),
                            dims
                        ),
                    ));
                }
                m
            }
            Some((Pending::Builtin { name, args }, _)) => {
                match builtin(name, args, Some(dim)).map_err(|e| self.builtin_diag(span, e))? {
                    BuiltinOp::Unitary(m) => m,
                    BuiltinOp::Measurement(_) => {
                        return Err(Diagnostic::error(
                            span,
                            codes::UNKNOWN_OPERATOR,
                            format!("`{label}` is a measurement, not a unitary"),
                        ));
                    }
                }
            }
            Some((Pending::Measurement { .. }, _)) => {
                return Err(Diagnostic::error(
                    span,
                    codes::UNKNOWN_OPERATOR,
                    format!("`{label}` is a measurement, not a unitary"),
                ));
            }
            None => match builtin(label, &[], Some(dim)) {
                Ok(BuiltinOp::Unitary(m)) => m,
                Ok(BuiltinOp::Measurement(_)) => {
                    return Err(Diagnostic::error(
                        span,
                        codes::UNKNOWN_OPERATOR,
                        format!("`{label}` is a measurement, not a unitary"),
                    ));
                }
                Err(BuiltinError::Unknown(_)) => {
                    return Err(Diagnostic::error(
                        span,
                        codes::UNKNOWN_OPERATOR,
                        format!("no definition or builtin named `{label}`"),
                    ));
                }
                Err(e) => return Err(self.builtin_diag(span, e)),
            },
        };
        if matrix.nrows() != dim {
            return Err(Diagnostic::error(
                span,
                codes::DIMENSION_MISMATCH,
                format!(
                    "`{label}` has dimension {} but the targets span dimension {dim}",
                    matrix.nrows()
                ),
            ));
        }
        let op = UnitaryOp::new(label, &self.layout, targets.to_vec(), matrix, self.tol.norm)
            .map_err(|e| match e {
                crate::operators::OperatorError::NotUnitary { label, defect } => Diagnostic::error(
                    span,
                    codes::NORMALIZATION_FAILURE,
                    format!("`{label}` is not unitary: max |U†U - I| = {defect:.3e}"),
                ),
                other => Diagnostic::error(span, codes::DIMENSION_MISMATCH, other.to_string()),
            })?;
        let arc = Arc::new(op);
        self.record(label, OperatorDef::Unitary(arc.clone()), span)?;
        Ok(arc)
    }

    /// Resolves `label` as a measurement set on `targets`.
    fn measurement_for(
        &mut self,
        label: &str,
        targets: &[usize],
        span: Span,
    ) -> Result<Arc<MeasurementSet>, Diagnostic> {
        let dim = self.sub_dim(targets);
        let outcomes: Vec<(u32, CMatrix)> = match self.defines.get(label) {
            Some((Pending::Measurement { outcomes, dims }, dspan)) => {
                let declared: usize = dims.iter().product();
                if declared != dim {
                    return Err(Diagnostic::error(
                        span,
                        codes::DIMENSION_MISMATCH,
                        format!(
                            "`{label}` is declared on dimension {declared} but the targets span {dim}"
                        ),
                    ));
                }
                let mut out = Vec::new();
                for (id, rows) in outcomes {
                    let m = rows_to_matrix(rows, *dspan)?;
                    if m.nrows() != declared {
                        return Err(Diagnostic::error(
                            *dspan,
                            codes::DIMENSION_MISMATCH,
                            format!(
                                "`{label}` outcome {id}: matrix is {}x{}, expected {declared}",
                                m.nrows(),
                                m.ncols()
                            ),
                        ));
                    }
                    out.push((*id, m));
                }
                out
            }
            Some((Pending::Builtin { name, args }, _)) => {
                match builtin(name, args, Some(dim)).map_err(|e| self.builtin_diag(span, e))? {
                    BuiltinOp::Measurement(o) => o,
                    BuiltinOp::Unitary(_) => {
                        return Err(Diagnostic::error(
                            span,
                            codes::UNKNOWN_OPERATOR,
                            format!("`{label}` is a unitary, not a measurement"),
                        ));
                    }
                }
            }
            Some((Pending::Matrix { .. }, _)) => {
                return Err(Diagnostic::error(
                    span,
                    codes::UNKNOWN_OPERATOR,
                    format!("`{label}` is a unitary, not a measurement"),
                ));
            }
            None => match builtin(label, &[], Some(dim)) {
                Ok(BuiltinOp::Measurement(o)) => o,
                Ok(BuiltinOp::Unitary(_)) => {
                    return Err(Diagnostic::error(
                        span,
                        codes::UNKNOWN_OPERATOR,
                        format!("`{label}` is a unitary, not a measurement"),
                    ));
                }
                Err(BuiltinError::Unknown(_)) => {
                    return Err(Diagnostic::error(
                        span,
                        codes::UNKNOWN_OPERATOR,
                        format!("no definition or builtin named `{label}`"),
                    ));
                }
                Err(e) => return Err(self.builtin_diag(span, e)),
            },
        };
        let mset = MeasurementSet::new(label, &self.layout, targets.to_vec(), outcomes, self.tol.norm)
            .map_err(|e| match e {
                crate::operators::OperatorError::NotNormalized { label, defect } => {
                    Diagnostic::error(
                        span,
                        codes::NORMALIZATION_FAILURE,
                        format!("`{label}` violates normalization: max |ΣM†M - I| = {defect:.3e}"),
                    )
                }
                other => Diagnostic::error(span, codes::DIMENSION_MISMATCH, other.to_string()),
            })?;
        let arc = Arc::new(mset);
        self.record(label, OperatorDef::Measurement(arc.clone()), span)?;
        Ok(arc)
    }

    /// Records a resolved operator, rejecting conflicting reuse of a label.
    fn record(&mut self, label: &str, def: OperatorDef, span: Span) -> Result<(), Diagnostic> {
        if let Some(existing) = self.table.get(label) {
            let same = match (existing, &def) {
                (OperatorDef::Unitary(a), OperatorDef::Unitary(b)) => {
                    a.matrix() == b.matrix()
                }
                (OperatorDef::Measurement(a), OperatorDef::Measurement(b)) => {
                    a.map().sub_dim() == b.map().sub_dim()
                }
                _ => false,
            };
            if !same {
                return Err(Diagnostic::error(
                    span,
                    codes::DIMENSION_MISMATCH,
                    format!("`{label}` is used at two incompatible dimensions"),
                ));
            }
            return Ok(());
        }
        self.table.insert(label.to_string(), def);
        Ok(())
    }

    fn lower(&mut self, stmt: &Stmt) -> Result<Ir, Diagnostic> {
        match &stmt.kind {
            StmtKind::Skip => Ok(Ir::Skip),
            StmtKind::InitKet { targets, ket } => {
                let vars = self.resolve_targets(targets, stmt.span)?;
                let mut steps = Vec::with_capacity(vars.len());
                let mut had_plus = false;
                for (i, &var) in vars.iter().enumerate() {
                    match &ket[i] {
                        KetSym::Basis(b) => {
                            if *b >= self.layout.dim_of(var) {
                                return Err(Diagnostic::error(
                                    stmt.span,
                                    codes::BASIS_RANGE,
                                    format!(
                                        "basis index {b} out of range for `{}` of dimension {}",
                                        self.layout.name_of(var),
                                        self.layout.dim_of(var)
                                    ),
                                ));
                            }
                            steps.push(InitStep {
                                var,
                                basis: *b,
                                hadamard: None,
                            });
                        }
                        KetSym::Plus => {
                            if self.layout.dim_of(var) != 2 {
                                return Err(Diagnostic::error(
                                    stmt.span,
                                    codes::DIMENSION_MISMATCH,
                                    format!(
                                        "`+` initializes a 2-dimensional variable; `{}` has dimension {}",
                                        self.layout.name_of(var),
                                        self.layout.dim_of(var)
                                    ),
                                ));
                            }
                            had_plus = true;
                            let h = UnitaryOp::new(
                                "H",
                                &self.layout,
                                vec![var],
                                super::builtins::hadamard(),
                                self.tol.norm,
                            )
                            .expect("builtin H is unitary");
                            steps.push(InitStep {
                                var,
                                basis: 0,
                                hadamard: Some(Arc::new(h)),
                            });
                        }
                    }
                }
                let label = ket_label(ket);
                if had_plus {
                    self.sugar.push(format!(
                        "{} := {} expands to per-target |0> initialization plus Hadamard; its cost is the atomic label {}",
                        targets.join(", "),
                        label,
                        label
                    ));
                }
                Ok(Ir::InitKet { steps, label })
            }
            StmtKind::Unitary { label, targets } => {
                let vars = self.resolve_targets(targets, stmt.span)?;
                let op = self.unitary_for(label, &vars, stmt.span)?;
                Ok(Ir::Unitary(op))
            }
            StmtKind::Seq(a, b) => {
                let mut items = Vec::new();
                let ia = self.lower(a)?;
                match ia {
                    Ir::Seq(mut inner) => items.append(&mut inner),
                    other => items.push(other),
                }
                let ib = self.lower(b)?;
                match ib {
                    Ir::Seq(mut inner) => items.append(&mut inner),
                    other => items.push(other),
                }
                Ok(Ir::Seq(items))
            }
            StmtKind::Case {
                label,
                targets,
                branches,
            } => {
                let vars = self.resolve_targets(targets, stmt.span)?;
                let mset = self.measurement_for(label, &vars, stmt.span)?;
                let mut expected: Vec<u32> = mset.outcome_ids().collect();
                expected.sort_unstable();
                let mut got: Vec<u32> = branches.iter().map(|(id, _)| *id).collect();
                got.sort_unstable();
                if got != expected {
                    return Err(Diagnostic::error(
                        stmt.span,
                        codes::CASE_COVERAGE,
                        format!(
                            "case over `{label}` must cover outcomes {expected:?} exactly once, got {got:?}"
                        ),
                    ));
                }
                let mut lowered = Vec::with_capacity(branches.len());
                for (id, body) in branches {
                    lowered.push((*id, self.lower(body)?));
                }
                Ok(Ir::Case {
                    mset,
                    branches: lowered,
                })
            }
            StmtKind::While {
                label,
                targets,
                body,
            } => {
                let vars = self.resolve_targets(targets, stmt.span)?;
                let mset = self.measurement_for(label, &vars, stmt.span)?;
                let mut ids: Vec<u32> = mset.outcome_ids().collect();
                ids.sort_unstable();
                if ids != vec![0, 1] {
                    return Err(Diagnostic::error(
                        stmt.span,
                        codes::GUARD_OUTCOMES,
                        format!(
                            "loop guard `{label}` must have outcomes {{0, 1}}, got {ids:?}"
                        ),
                    ));
                }
                let loop_id = self.loop_count;
                self.loop_count += 1;
                let body = self.lower(body)?;
                Ok(Ir::While {
                    mset,
                    body: Box::new(body),
                    loop_id,
                })
            }
        }
    }
}
