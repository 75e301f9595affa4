//! OpenQASM 2.0 subset importer.
//!
//! Accepted statements: the `OPENQASM 2.0;` header, `include`, one `qreg`,
//! any number of `creg`s, the gates `h x rx ry rz cx cp cu1`, `measure` and
//! `barrier`. `x` lowers to `RX(π)` (equal up to global phase) and `cp`/`cu1`
//! lower to CR1. Single-qubit gates, `measure` and `barrier` accept a whole
//! register and broadcast over it. Angle expressions support numbers, `pi`,
//! `+ - * /`, unary minus and parentheses.

mod lexer;
mod parser;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ir::GateList;

pub use parser::parse_qasm;

/// Location of a token: 1-based line and column (in characters), plus the
/// byte offset and byte length into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
    pub length: usize,
}

impl SourceSpan {
    /// The source text this span covers.
    pub fn slice<'a>(&self, src: &'a str) -> &'a str {
        src.get(self.offset..self.offset + self.length).unwrap_or("")
    }

    /// Span running from the start of `self` to the end of `other`.
    pub fn to(&self, other: SourceSpan) -> SourceSpan {
        SourceSpan { length: other.offset + other.length - self.offset, ..*self }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}+{}", self.line, self.column, self.length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    Syntax,
    UnsupportedGate,
    UnsupportedStatement,
    RegisterRedefinition,
    UndefinedRegister,
    IndexOutOfRange,
    /// Wrong number of parameters or operands, or a repeated operand.
    Operands,
    IgnoredInclude,
}

impl DiagnosticKind {
    pub fn name(self) -> &'static str {
        match self {
            DiagnosticKind::Syntax => "syntax",
            DiagnosticKind::UnsupportedGate => "unsupported-gate",
            DiagnosticKind::UnsupportedStatement => "unsupported-statement",
            DiagnosticKind::RegisterRedefinition => "register-redefinition",
            DiagnosticKind::UndefinedRegister => "undefined-register",
            DiagnosticKind::IndexOutOfRange => "index-out-of-range",
            DiagnosticKind::Operands => "operands",
            DiagnosticKind::IgnoredInclude => "ignored-include",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseDiagnostic {
    pub(crate) fn error(kind: DiagnosticKind, message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic { severity: Severity::Error, kind, message: message.into(), span }
    }

    pub(crate) fn warning(kind: DiagnosticKind, message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic { severity: Severity::Warning, kind, message: message.into(), span }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `error[unsupported-gate] 3:1+3: gate `ccx` is not supported`
impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}: {}", self.kind.name(), self.span, self.message)
    }
}

/// Parser result. `circuit` is `None` whenever any diagnostic is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutput {
    pub circuit: Option<GateList>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", render(.0))]
pub struct QasmError(pub Vec<ParseDiagnostic>);

fn render(d: &[ParseDiagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

impl ParseOutput {
    pub fn errors(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.diagnostics.iter().filter(|d| !d.is_error())
    }

    /// The circuit and its warnings, or every diagnostic on failure.
    pub fn into_result(self) -> Result<(GateList, Vec<ParseDiagnostic>), QasmError> {
        match self.circuit {
            Some(c) => Ok((c, self.diagnostics)),
            None => Err(QasmError(self.diagnostics)),
        }
    }
}
