//! Hand-written lexer with line/column tracking.

use super::ast::Span;
use super::diagnostics::{codes, Diagnostic};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Integer literal; the raw text is kept because ket literals are read
    /// digit by digit.
    Int(String),
    /// Non-integer numeric literal.
    Number(String),
    Semi,
    Comma,
    Colon,
    ColonEq,
    StarEq,
    Arrow,
    Pipe,
    Gt,
    Eq,
    Plus,
    Minus,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    KwVar,
    KwBool,
    KwInt,
    KwSkip,
    KwCase,
    KwOf,
    KwEnd,
    KwWhile,
    KwDo,
    KwOd,
    KwDefine,
    KwMatrix,
    KwMeasurement,
    KwBuiltin,
    KwOn,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) | Tok::Number(s) => format!("number `{s}`"),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::ColonEq => "`:=`".into(),
            Tok::StarEq => "`*=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::KwVar => "`var`".into(),
            Tok::KwBool => "`bool`".into(),
            Tok::KwInt => "`int`".into(),
            Tok::KwSkip => "`skip`".into(),
            Tok::KwCase => "`case`".into(),
            Tok::KwOf => "`of`".into(),
            Tok::KwEnd => "`end`".into(),
            Tok::KwWhile => "`while`".into(),
            Tok::KwDo => "`do`".into(),
            Tok::KwOd => "`od`".into(),
            Tok::KwDefine => "`define`".into(),
            Tok::KwMatrix => "`matrix`".into(),
            Tok::KwMeasurement => "`measurement`".into(),
            Tok::KwBuiltin => "`builtin`".into(),
            Tok::KwOn => "`on`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            let ch = chars.next();
            if let Some(c) = ch {
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            ch
        }};
    }

    loop {
        // Skip whitespace and // comments.
        loop {
            match chars.peek() {
                Some(c) if c.is_whitespace() => {
                    bump!();
                }
                Some('/') => {
                    let mut ahead = chars.clone();
                    ahead.next();
                    if ahead.peek() == Some(&'/') {
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            bump!();
                        }
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        let span = Span { line, col };
        let Some(&c) = chars.peek() else {
            out.push((Tok::Eof, span));
            return Ok(out);
        };
        let tok = match c {
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                match s.as_str() {
                    "var" => Tok::KwVar,
                    "bool" => Tok::KwBool,
                    "int" => Tok::KwInt,
                    "skip" => Tok::KwSkip,
                    "case" => Tok::KwCase,
                    "of" => Tok::KwOf,
                    "end" => Tok::KwEnd,
                    "while" => Tok::KwWhile,
                    "do" => Tok::KwDo,
                    "od" => Tok::KwOd,
                    "define" => Tok::KwDefine,
                    "matrix" => Tok::KwMatrix,
                    "measurement" => Tok::KwMeasurement,
                    "builtin" => Tok::KwBuiltin,
                    "on" => Tok::KwOn,
                    _ => Tok::Ident(s),
                }
            }
            '0'..='9' => {
                let mut s = String::new();
                let mut is_int = true;
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                if chars.peek() == Some(&'.') {
                    is_int = false;
                    s.push('.');
                    bump!();
                    while let Some(&c) = chars.peek() {
                        if c.is_ascii_digit() {
                            s.push(c);
                            bump!();
                        } else {
                            break;
                        }
                    }
                }
                if matches!(chars.peek(), Some('e') | Some('E')) {
                    is_int = false;
                    s.push('e');
                    bump!();
                    if matches!(chars.peek(), Some('+') | Some('-')) {
                        s.push(*chars.peek().unwrap());
                        bump!();
                    }
                    while let Some(&c) = chars.peek() {
                        if c.is_ascii_digit() {
                            s.push(c);
                            bump!();
                        } else {
                            break;
                        }
                    }
                }
                if is_int {
                    Tok::Int(s)
                } else {
                    Tok::Number(s)
                }
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    Tok::ColonEq
                } else {
                    Tok::Colon
                }
            }
            '*' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    Tok::StarEq
                } else {
                    return Err(Diagnostic::error(
                        span,
                        codes::LEXICAL,
                        "expected `*=`".to_string(),
                    ));
                }
            }
            '-' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            ';' => {
                bump!();
                Tok::Semi
            }
            ',' => {
                bump!();
                Tok::Comma
            }
            '|' => {
                bump!();
                Tok::Pipe
            }
            '>' => {
                bump!();
                Tok::Gt
            }
            '=' => {
                bump!();
                Tok::Eq
            }
            '+' => {
                bump!();
                Tok::Plus
            }
            '[' => {
                bump!();
                Tok::LBracket
            }
            ']' => {
                bump!();
                Tok::RBracket
            }
            '{' => {
                bump!();
                Tok::LBrace
            }
            '}' => {
                bump!();
                Tok::RBrace
            }
            '(' => {
                bump!();
                Tok::LParen
            }
            ')' => {
                bump!();
                Tok::RParen
            }
            other => {
                return Err(Diagnostic::error(
                    span,
                    codes::LEXICAL,
                    format!("unexpected character `{other}`"),
                ));
            }
        };
        out.push((tok, span));
    }
}
