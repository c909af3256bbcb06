//! Text formats for specifications, facts, updates and implication goals.
//!
//! ```text
//! schema R/3.
//! view V1/2, V2/2.
//! def V1(x, y) :- R(x, y, z).
//! def V2(y, z) :- R(x, y, z).
//! @db egd R(x, y, z), R(x2, y, z2) -> z = z2.
//! ```
//!
//! In rules, bare identifiers are variables and constants are quoted or
//! digit-leading. In facts files bare identifiers are constants. In updates
//! an identifier is a variable when a delete/replace pattern or a positive
//! condition atom of the same step mentions it, and a constant otherwise;
//! `?v` is always a variable and `_` a fresh one.

mod elab;
mod lexer;
mod parser;
mod print;

use std::fmt;

use serde::Serialize;

use crate::deps::{Dependency, ViewSpec};
use crate::model::{Instance, Schema};
use crate::updates::UpdateProgram;

pub use print::{
    print_dependency, print_fact, print_facts, print_goal, print_rewriting, print_rule_atom, print_spec, print_step,
    print_update, quote,
};

/// A source location: 1-based line and column, length in characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        SourceSpan {
            file: "<input>".to_string(),
            line,
            column,
            length: length.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    Syntax,
    UnknownSymbol,
    ArityMismatch,
    UnsafeRule,
    DuplicateDefinition,
    DuplicateDeclaration,
    MissingDefinition,
    MisplacedConstraint,
    NonGroundFact,
    UnsafeUpdate,
    Invalid,
}

impl DiagnosticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticKind::Syntax => "syntax",
            DiagnosticKind::UnknownSymbol => "unknown-symbol",
            DiagnosticKind::ArityMismatch => "arity-mismatch",
            DiagnosticKind::UnsafeRule => "unsafe-rule",
            DiagnosticKind::DuplicateDefinition => "duplicate-definition",
            DiagnosticKind::DuplicateDeclaration => "duplicate-declaration",
            DiagnosticKind::MissingDefinition => "missing-definition",
            DiagnosticKind::MisplacedConstraint => "misplaced-constraint",
            DiagnosticKind::NonGroundFact => "non-ground-fact",
            DiagnosticKind::UnsafeUpdate => "unsafe-update",
            DiagnosticKind::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            kind,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.span, self.kind.as_str(), self.message)
    }
}

/// Every problem found in one input, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseError {
    /// Attributes every diagnostic to `file`.
    pub fn in_file(mut self, file: &str) -> Self {
        for d in &mut self.diagnostics {
            d.span.file = file.to_string();
        }
        self
    }

    pub fn has(&self, kind: DiagnosticKind) -> bool {
        self.diagnostics.iter().any(|d| d.kind == kind)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

fn run<T>(text: &str, f: impl FnOnce(&mut elab::Elab, &[parser::Stmt]) -> Option<T>) -> Result<T, ParseError> {
    let fail = |d: Diagnostic| ParseError { diagnostics: vec![d] };
    let toks = lexer::lex(text).map_err(fail)?;
    let stmts = parser::Parser::new(toks).statements().map_err(fail)?;
    let mut e = elab::Elab::default();
    match f(&mut e, &stmts) {
        Some(v) if e.diags.is_empty() => Ok(v),
        _ if e.diags.is_empty() => Err(fail(Diagnostic::new(
            DiagnosticKind::Invalid,
            "input rejected",
            SourceSpan::new(1, 1, 1),
        ))),
        _ => Err(ParseError { diagnostics: e.diags }),
    }
}

pub fn parse_spec(text: &str) -> Result<ViewSpec, ParseError> {
    run(text, |e, s| e.spec(s))
}

/// Parses ground facts over `schema`.
pub fn parse_facts(text: &str, schema: &Schema) -> Result<Instance, ParseError> {
    run(text, |e, s| e.facts(s, schema))
}

/// Parses a single update whose atoms range over the view symbols of `schema`.
pub fn parse_update(text: &str, schema: &Schema) -> Result<UpdateProgram, ParseError> {
    run(text, |e, s| e.update(s, schema))
}

/// Parses a single `tgd` or `egd` over the symbols of `schema`.
pub fn parse_goal(text: &str, schema: &Schema) -> Result<Dependency, ParseError> {
    run(text, |e, s| e.goal(s, schema))
}

#[cfg(test)]
mod tests;
