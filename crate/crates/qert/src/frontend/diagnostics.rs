//! Machine-readable diagnostics.

use super::ast::Span;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes.
pub mod codes {
    pub const LEXICAL: &str = "E001";
    pub const SYNTAX: &str = "E002";
    pub const UNDECLARED_VARIABLE: &str = "E101";
    pub const DUPLICATE_DECLARATION: &str = "E102";
    pub const DIMENSION_MISMATCH: &str = "E103";
    pub const NORMALIZATION_FAILURE: &str = "E104";
    pub const CASE_COVERAGE: &str = "E105";
    pub const UNKNOWN_OPERATOR: &str = "E106";
    pub const GUARD_OUTCOMES: &str = "E107";
    pub const BASIS_RANGE: &str = "E108";
}

/// One diagnostic record; serializes to
/// `{"severity": "...", "line": n, "col": n, "code": "Exxx", "message": "..."}`.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: u32,
    pub col: u32,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(span: Span, code: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            line: span.line,
            col: span.col,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {} [{}]: {}",
            self.line,
            self.col,
            match self.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            },
            self.code,
            self.message
        )
    }
}

impl std::error::Error for Diagnostic {}
