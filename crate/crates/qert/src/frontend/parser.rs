//! Recursive-descent parser.

use super::ast::*;
use super::diagnostics::{codes, Diagnostic};
use super::lexer::{lex, Tok};

pub fn parse(src: &str) -> Result<SourceFile, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let file = p.source_file()?;
    Ok(file)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> Diagnostic {
        Diagnostic::error(
            self.span(),
            codes::SYNTAX,
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), Diagnostic> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, Diagnostic> {
        if let Tok::Ident(s) = self.peek() {
            let s = s.clone();
            self.bump();
            Ok(s)
        } else {
            Err(self.err(expected))
        }
    }

    fn int(&mut self, expected: &str) -> Result<usize, Diagnostic> {
        if let Tok::Int(s) = self.peek() {
            let v = s
                .parse::<usize>()
                .map_err(|_| self.err("an integer in range"))?;
            self.bump();
            Ok(v)
        } else {
            Err(self.err(expected))
        }
    }

    fn source_file(&mut self) -> Result<SourceFile, Diagnostic> {
        let mut decls = Vec::new();
        while matches!(self.peek(), Tok::KwVar | Tok::KwDefine) {
            decls.push(self.decl()?);
        }
        let body = self.stmt_seq()?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return Err(self.err("end of input or another statement"));
        }
        Ok(SourceFile { decls, body })
    }

    fn decl(&mut self) -> Result<Decl, Diagnostic> {
        let span = self.span();
        match self.peek() {
            Tok::KwVar => {
                self.bump();
                let name = self.ident("a variable name")?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = match self.peek() {
                    Tok::KwBool => {
                        self.bump();
                        VarType::Bool
                    }
                    Tok::KwInt => {
                        self.bump();
                        self.expect(Tok::LBracket, "`[`")?;
                        let d = self.int("a dimension")?;
                        self.expect(Tok::RBracket, "`]`")?;
                        VarType::Int(d)
                    }
                    _ => return Err(self.err("`bool` or `int[d]`")),
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Decl {
                    kind: DeclKind::Var { name, ty },
                    span,
                })
            }
            Tok::KwDefine => {
                self.bump();
                let name = self.ident("an operator name")?;
                self.expect(Tok::ColonEq, "`:=`")?;
                let def = self.operator_def()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Decl {
                    kind: DeclKind::Define { name, def },
                    span,
                })
            }
            _ => Err(self.err("`var` or `define`")),
        }
    }

    fn operator_def(&mut self) -> Result<OperatorDefExpr, Diagnostic> {
        match self.peek() {
            Tok::KwMatrix => {
                self.bump();
                let rows = self.matrix_literal()?;
                self.expect(Tok::KwOn, "`on`")?;
                let dims = self.dims()?;
                Ok(OperatorDefExpr::Matrix { rows, dims })
            }
            Tok::KwMeasurement => {
                self.bump();
                self.expect(Tok::LBrace, "`{`")?;
                let mut outcomes = Vec::new();
                loop {
                    let id = self.int("an outcome id")? as u32;
                    self.expect(Tok::Colon, "`:`")?;
                    let rows = self.matrix_literal()?;
                    outcomes.push((id, rows));
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "`}`")?;
                self.expect(Tok::KwOn, "`on`")?;
                let dims = self.dims()?;
                Ok(OperatorDefExpr::Measurement { outcomes, dims })
            }
            Tok::KwBuiltin => {
                self.bump();
                let name = self.ident("a builtin name")?;
                let mut args = Vec::new();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    loop {
                        args.push(self.int("a builtin argument")?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RParen, "`)`")?;
                }
                Ok(OperatorDefExpr::Builtin { name, args })
            }
            _ => Err(self.err("`matrix`, `measurement` or `builtin`")),
        }
    }

    fn dims(&mut self) -> Result<Vec<usize>, Diagnostic> {
        let mut dims = vec![self.int("a dimension")?];
        while *self.peek() == Tok::Comma {
            self.bump();
            dims.push(self.int("a dimension")?);
        }
        Ok(dims)
    }

    /// `[[[re, im], ...], ...]` — row-major complex matrix.
    fn matrix_literal(&mut self) -> Result<Vec<Vec<(f64, f64)>>, Diagnostic> {
        self.expect(Tok::LBracket, "`[` starting a matrix")?;
        let mut rows = Vec::new();
        loop {
            rows.push(self.row_literal()?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBracket, "`]` closing a matrix")?;
        Ok(rows)
    }

    fn row_literal(&mut self) -> Result<Vec<(f64, f64)>, Diagnostic> {
        self.expect(Tok::LBracket, "`[` starting a row")?;
        let mut row = Vec::new();
        loop {
            self.expect(Tok::LBracket, "`[` starting a complex pair")?;
            let re = self.number()?;
            self.expect(Tok::Comma, "`,`")?;
            let im = self.number()?;
            self.expect(Tok::RBracket, "`]` closing a complex pair")?;
            row.push((re, im));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBracket, "`]` closing a row")?;
        Ok(row)
    }

    fn number(&mut self) -> Result<f64, Diagnostic> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let text = match self.peek() {
            Tok::Int(s) | Tok::Number(s) => s.clone(),
            _ => return Err(self.err("a number")),
        };
        self.bump();
        let v: f64 = text.parse().map_err(|_| self.err("a number"))?;
        Ok(if neg { -v } else { v })
    }

    fn starts_stmt(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::KwSkip | Tok::Ident(_) | Tok::LBracket | Tok::KwCase | Tok::KwWhile
        )
    }

    /// A `;`-separated statement sequence, right-associated.
    ///
    /// A `;` is consumed as a sequencing separator only when a statement
    /// follows; otherwise it is left for the enclosing construct (branch
    /// separators, trailing separators before `end`/`od`/EOF).
    fn stmt_seq(&mut self) -> Result<Stmt, Diagnostic> {
        let first = self.stmt()?;
        if *self.peek() == Tok::Semi && Self::starts_stmt(self.peek_at(1)) {
            let span = first.span;
            self.bump();
            let rest = self.stmt_seq()?;
            Ok(Stmt::new(
                StmtKind::Seq(Box::new(first), Box::new(rest)),
                span,
            ))
        } else {
            Ok(first)
        }
    }

    fn stmt(&mut self) -> Result<Stmt, Diagnostic> {
        let span = self.span();
        match self.peek().clone() {
            Tok::KwSkip => {
                self.bump();
                Ok(Stmt::new(StmtKind::Skip, span))
            }
            Tok::Ident(name) => {
                self.bump();
                self.expect(Tok::ColonEq, "`:=`")?;
                let ket = self.ket_literal(1)?;
                Ok(Stmt::new(
                    StmtKind::InitKet {
                        targets: vec![name],
                        ket,
                    },
                    span,
                ))
            }
            Tok::LBracket => {
                self.bump();
                let targets = self.target_list()?;
                self.expect(Tok::RBracket, "`]`")?;
                match self.peek() {
                    Tok::StarEq => {
                        self.bump();
                        let label = self.ident("a unitary name")?;
                        Ok(Stmt::new(StmtKind::Unitary { label, targets }, span))
                    }
                    Tok::ColonEq => {
                        self.bump();
                        let ket = self.ket_literal(targets.len())?;
                        Ok(Stmt::new(StmtKind::InitKet { targets, ket }, span))
                    }
                    _ => Err(self.err("`*=` or `:=`")),
                }
            }
            Tok::KwCase => {
                self.bump();
                let label = self.ident("a measurement name")?;
                self.expect(Tok::LBracket, "`[`")?;
                let targets = self.target_list()?;
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::KwOf, "`of`")?;
                let mut branches = Vec::new();
                loop {
                    let id = self.int("an outcome id")? as u32;
                    self.expect(Tok::Arrow, "`->`")?;
                    let body = self.stmt_seq()?;
                    branches.push((id, body));
                    if *self.peek() == Tok::Semi {
                        // `;` then another branch, or a trailing `;` before `end`.
                        if matches!(self.peek_at(1), Tok::Int(_)) && *self.peek_at(2) == Tok::Arrow
                        {
                            self.bump();
                            continue;
                        }
                        if *self.peek_at(1) == Tok::KwEnd {
                            self.bump();
                        }
                    }
                    break;
                }
                self.expect(Tok::KwEnd, "`end`")?;
                Ok(Stmt::new(
                    StmtKind::Case {
                        label,
                        targets,
                        branches,
                    },
                    span,
                ))
            }
            Tok::KwWhile => {
                self.bump();
                let label = self.ident("a measurement name")?;
                self.expect(Tok::LBracket, "`[`")?;
                let targets = self.target_list()?;
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::Eq, "`=`")?;
                let one = self.int("`1`")?;
                if one != 1 {
                    return Err(Diagnostic::error(
                        span,
                        codes::SYNTAX,
                        "loop guards have the form `while M[q] = 1 do ... od`",
                    ));
                }
                self.expect(Tok::KwDo, "`do`")?;
                let body = self.stmt_seq()?;
                if *self.peek() == Tok::Semi && *self.peek_at(1) == Tok::KwOd {
                    self.bump();
                }
                self.expect(Tok::KwOd, "`od`")?;
                Ok(Stmt::new(
                    StmtKind::While {
                        label,
                        targets,
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            _ => Err(self.err("a statement")),
        }
    }

    fn target_list(&mut self) -> Result<Vec<String>, Diagnostic> {
        let mut targets = vec![self.ident("a variable name")?];
        while *self.peek() == Tok::Comma {
            self.bump();
            targets.push(self.ident("a variable name")?);
        }
        Ok(targets)
    }

    /// `|...>` with `n_targets` symbols. A single target takes the whole
    /// digit run as one basis index (`|12>`); multiple targets read one
    /// symbol (`0`-`9` or `+`) per target.
    fn ket_literal(&mut self, n_targets: usize) -> Result<Vec<KetSym>, Diagnostic> {
        let span = self.span();
        self.expect(Tok::Pipe, "`|`")?;
        let mut raw = String::new();
        loop {
            match self.peek() {
                Tok::Int(s) => {
                    raw.push_str(s);
                    self.bump();
                }
                Tok::Plus => {
                    raw.push('+');
                    self.bump();
                }
                Tok::Gt => break,
                _ => return Err(self.err("ket symbols (`0`-`9`, `+`) or `>`")),
            }
        }
        self.expect(Tok::Gt, "`>`")?;
        if raw.is_empty() {
            return Err(Diagnostic::error(span, codes::SYNTAX, "empty ket literal"));
        }
        if n_targets == 1 {
            if raw == "+" {
                return Ok(vec![KetSym::Plus]);
            }
            if raw.chars().all(|c| c.is_ascii_digit()) {
                let b: usize = raw.parse().map_err(|_| {
                    Diagnostic::error(span, codes::SYNTAX, "basis index out of range")
                })?;
                return Ok(vec![KetSym::Basis(b)]);
            }
            return Err(Diagnostic::error(
                span,
                codes::SYNTAX,
                format!("a single target takes `|b>` or `|+>`, got `|{raw}>`"),
            ));
        }
        let syms: Vec<KetSym> = raw
            .chars()
            .map(|c| match c {
                '+' => KetSym::Plus,
                d => KetSym::Basis(d.to_digit(10).unwrap() as usize),
            })
            .collect();
        if syms.len() != n_targets {
            return Err(Diagnostic::error(
                span,
                codes::SYNTAX,
                format!(
                    "ket `|{raw}>` has {} symbols but there are {} targets",
                    syms.len(),
                    n_targets
                ),
            ));
        }
        Ok(syms)
    }
}
