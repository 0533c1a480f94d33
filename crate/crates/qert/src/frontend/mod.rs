//! Concrete syntax, parser and elaborator for quantum while-programs.
//!
//! The surface language:
//!
//! ```text
//! var q : bool;                 // 2-dimensional variable
//! var k : int[8];               // finite integer variable, basis |0>..|7>
//! define U  := matrix [[[0,0],[1,0]],[[1,0],[0,0]]] on 2;
//! define M  := measurement { 0: [[[1,0],[0,0]],[[0,0],[0,0]]],
//!                            1: [[[0,0],[0,0]],[[0,0],[1,0]]] } on 2;
//! define Mk := builtin M_geq(3, 8);
//!
//! k := |0>;                     // basis-ket initialization
//! [q] *= H;                     // unitary application
//! case M[q] of 0 -> skip; 1 -> q := |0> end
//! while Mk[k] = 1 do skip od
//! ```
//!
//! Statements are sequenced with `;`, comments start with `//`. Matrix
//! literals are row-major lists of complex `[re, im]` pairs (plain JSON).
//! `q := |+>` is sugar for initialize-then-Hadamard; it keeps the atomic
//! cost label `|+>` and the expansion is surfaced in analysis reports.

mod ast;
mod builtins;
mod diagnostics;
mod elaborate;
mod lexer;
mod parser;
mod pretty;

pub use ast::{Decl, DeclKind, KetSym, OperatorDefExpr, SourceFile, Span, Stmt, StmtKind, VarType};
pub use builtins::{builtin, BuiltinOp};
pub use diagnostics::{codes, Diagnostic, Severity};
pub use elaborate::{elaborate, ElaboratedProgram, InitStep, Ir, OperatorDef};
pub use parser::parse;
pub use pretty::pretty_print;
