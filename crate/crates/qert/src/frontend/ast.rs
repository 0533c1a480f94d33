//! Abstract syntax. Equality on AST nodes ignores source spans so that
//! parse/pretty-print round trips can be compared structurally.

use serde::Serialize;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

/// One symbol of a ket literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KetSym {
    /// Computational-basis index.
    Basis(usize),
    /// `+`: basis 0 followed by a Hadamard.
    Plus,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StmtKind {
    Skip,
    /// `q := |b>` / `[q1, ..., qn] := |s1...sn>`, one symbol per target.
    InitKet {
        targets: Vec<String>,
        ket: Vec<KetSym>,
    },
    /// `[q1, ..., qn] *= U`
    Unitary {
        label: String,
        targets: Vec<String>,
    },
    Seq(Box<Stmt>, Box<Stmt>),
    /// `case M[q...] of m -> S; ... end`
    Case {
        label: String,
        targets: Vec<String>,
        branches: Vec<(u32, Stmt)>,
    },
    /// `while M[q...] = 1 do S od`
    While {
        label: String,
        targets: Vec<String>,
        body: Box<Stmt>,
    },
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Self { kind, span }
    }
}

/// Canonical text of a ket literal, e.g. `|0>`, `|+>`, `|++>`, `|12>`.
pub fn ket_label(ket: &[KetSym]) -> String {
    let mut s = String::from("|");
    for sym in ket {
        match sym {
            KetSym::Basis(b) => s.push_str(&b.to_string()),
            KetSym::Plus => s.push('+'),
        }
    }
    s.push('>');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum VarType {
    Bool,
    Int(usize),
}

impl VarType {
    pub fn dim(&self) -> usize {
        match self {
            VarType::Bool => 2,
            VarType::Int(d) => *d,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Decl {
    pub kind: DeclKind,
    #[serde(skip)]
    pub span: Span,
}

impl PartialEq for Decl {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DeclKind {
    Var {
        name: String,
        ty: VarType,
    },
    Define {
        name: String,
        def: OperatorDefExpr,
    },
}

/// Row-major complex matrix literal: rows of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<(f64, f64)>>;

/// Right-hand side of a `define`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OperatorDefExpr {
    /// `matrix [[..]] on d1, d2, ...` — a unitary given entrywise,
    /// row-major, complex entries as `[re, im]` pairs.
    Matrix {
        rows: MatrixRows,
        dims: Vec<usize>,
    },
    /// `measurement { m: [[..]], ... } on d1, ...`
    Measurement {
        outcomes: Vec<(u32, MatrixRows)>,
        dims: Vec<usize>,
    },
    /// `builtin NAME` or `builtin NAME(a1, ..., ak)`
    Builtin {
        name: String,
        args: Vec<usize>,
    },
}

/// A parsed source file: declarations followed by the program body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceFile {
    pub decls: Vec<Decl>,
    pub body: Stmt,
}
