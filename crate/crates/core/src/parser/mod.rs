//! Textual process notation.
//!
//! Tasks are written `Name[i1, .., ik]{duration}`; `,` sequences, `||` runs
//! in parallel, `(a / [C] b)` is a controller choice, `(a ^ [N: p] b)` a
//! nature split taking `a` with probability `p`, and
//! `<[L: p, max n] body>` a loop repeating with probability `p` at most `n`
//! times.

mod ast;
mod build;
mod dot;
mod grammar;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::process::{unravel_loops, BpmnCpi, LoopSpec};

pub use ast::Expr;
pub use build::{join_name, to_expr, to_graph, END, START};
pub use dot::{process_to_dot, quote};

/// 1-based location of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    pub(crate) fn syntax(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError { kind: ParseErrorKind::Syntax, message: message.into(), span }
    }

    pub(crate) fn semantic(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError { kind: ParseErrorKind::Semantic, message: message.into(), span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot express diagram as text: {0}")]
pub struct DecompileError(pub String);

/// A parsed model before loop unraveling: loops are still back edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedProcess {
    pub process: BpmnCpi,
    pub loops: Vec<LoopSpec>,
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    grammar::parse_expr(text)
}

pub fn parse_model(text: &str) -> Result<ParsedProcess, ParseError> {
    Ok(to_graph(&parse_expr(text)?))
}

/// Parses a model and unravels its loops, giving an acyclic process.
pub fn parse_process(text: &str) -> Result<BpmnCpi, ParseError> {
    let parsed = parse_model(text)?;
    unravel_loops(&parsed.process, &parsed.loops).map_err(|e| {
        ParseError::semantic(SourceSpan { line: 1, column: 1, length: 1 }, e.to_string())
    })
}

/// Canonical text of a parsed model.
pub fn pretty_print(parsed: &ParsedProcess) -> Result<String, DecompileError> {
    Ok(to_expr(parsed)?.render())
}
