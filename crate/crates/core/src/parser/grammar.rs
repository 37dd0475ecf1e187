//! Tokenizer and recursive-descent parser for the process DSL.
//!
//! ```text
//! process  := seq
//! seq      := par ( "," par )*
//! par      := atom ( "||" atom )*
//! atom     := task | choice | nature | loop | "(" seq ")"
//! task     := IDENT "[" NUM ("," NUM)* "]" "{" INT "}"
//! choice   := "(" seq "/" "[" IDENT "]" seq ")"
//! nature   := "(" seq "^" "[" IDENT ":" NUM "]" seq ")"
//! loop     := "<" "[" IDENT ":" NUM "," "max" INT "]" seq ">"
//! ```
//!
//! `//` starts a comment running to the end of the line.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::ast::Expr;
use super::{ParseError, SourceSpan};
use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Comma,
    Par,
    Slash,
    Caret,
    Colon,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Lt,
    Gt,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Comma => "`,`".into(),
            Tok::Par => "`||`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = |len: usize| SourceSpan { line, column: col, length: len.max(1) };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[start..j].iter().collect()), j - start)
        } else if c.is_ascii_digit() {
            let start = i;
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && chars[j] == '.' {
                j += 1;
                let frac_start = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j == frac_start {
                    return Err(ParseError::syntax(span(j - start), "expected digits after decimal point"));
                }
            }
            (Tok::Num(chars[start..j].iter().collect()), j - start)
        } else {
            let tok = match c {
                ',' => Tok::Comma,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                ':' => Tok::Colon,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '|' if chars.get(i + 1) == Some(&'|') => Tok::Par,
                '|' => return Err(ParseError::syntax(span(1), "expected `||`")),
                other => return Err(ParseError::syntax(span(1), format!("unexpected character `{other}`"))),
            };
            let len = if tok == Tok::Par { 2 } else { 1 };
            (tok, len)
        };
        tokens.push(Token { tok, span: span(len) });
        i += len;
        col += len;
    }
    tokens.push(Token { tok: Tok::Eof, span: SourceSpan { line, column: col, length: 1 } });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    names: BTreeMap<String, SourceSpan>,
    impact_dim: Option<usize>,
}

/// Parses DSL text into an expression tree, performing every semantic check
/// that needs a source location.
pub(super) fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.len() == 1 {
        return Err(ParseError::syntax(tokens[0].span, "empty process"));
    }
    let mut parser = Parser { tokens, pos: 0, names: BTreeMap::new(), impact_dim: None };
    let expr = parser.seq()?;
    let next = parser.peek();
    if next.tok != Tok::Eof {
        return Err(ParseError::syntax(next.span, format!("unexpected {}", next.tok.describe())));
    }
    Ok(expr)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(ParseError::syntax(t.span, format!("expected {}, found {}", want.describe(), t.tok.describe())))
        }
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.span)),
            other => Err(ParseError::syntax(t.span, format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn declare(&mut self, name: &str, span: SourceSpan) -> Result<(), ParseError> {
        if let Some(first) = self.names.get(name) {
            return Err(ParseError::semantic(
                span,
                format!("duplicate identifier `{name}` (first declared at {}:{})", first.line, first.column),
            ));
        }
        self.names.insert(name.to_string(), span);
        Ok(())
    }

    /// NUM, optionally written as a fraction `a/b`.
    fn number(&mut self) -> Result<(Rational, SourceSpan), ParseError> {
        let t = self.bump();
        let Tok::Num(mut text) = t.tok else {
            return Err(ParseError::syntax(t.span, format!("expected number, found {}", t.tok.describe())));
        };
        let mut span = t.span;
        if self.peek().tok == Tok::Slash && matches!(self.tokens[self.pos + 1].tok, Tok::Num(_)) {
            self.bump();
            let den = self.bump();
            if let Tok::Num(d) = den.tok {
                text = format!("{text}/{d}");
                if den.span.line == span.line {
                    span.length = den.span.column + den.span.length - span.column;
                }
            }
        }
        let value = parse_rational(&text).map_err(|e| ParseError::semantic(span, e.to_string()))?;
        Ok((value, span))
    }

    fn positive_int(&mut self, what: &str) -> Result<(u64, SourceSpan), ParseError> {
        let t = self.bump();
        let Tok::Num(text) = &t.tok else {
            return Err(ParseError::syntax(t.span, format!("expected integer {what}, found {}", t.tok.describe())));
        };
        if text.contains('.') {
            return Err(ParseError::syntax(t.span, format!("{what} must be an integer")));
        }
        let value: u64 = text.parse().map_err(|_| ParseError::semantic(t.span, format!("{what} is too large")))?;
        if value == 0 {
            return Err(ParseError::semantic(t.span, format!("non-positive {what}")));
        }
        Ok((value, t.span))
    }

    fn probability(&mut self) -> Result<Rational, ParseError> {
        let (p, span) = self.number()?;
        if p < Rational::zero() || p > Rational::one() {
            return Err(ParseError::semantic(span, "probability out of range"));
        }
        Ok(p)
    }

    fn seq(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.par()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            items.push(self.par()?);
        }
        Ok(Expr::seq(items))
    }

    fn par(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.atom()?];
        while self.peek().tok == Tok::Par {
            self.bump();
            items.push(self.atom()?);
        }
        Ok(Expr::par(items))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(_) => self.task(),
            Tok::LParen => {
                self.bump();
                let left = self.seq()?;
                let op = self.bump();
                match op.tok {
                    Tok::RParen => Ok(left),
                    Tok::Slash => {
                        self.expect(Tok::LBrack)?;
                        let (name, span) = self.ident()?;
                        self.declare(&name, span)?;
                        self.expect(Tok::RBrack)?;
                        let right = self.seq()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Choice { name, left: Box::new(left), right: Box::new(right) })
                    }
                    Tok::Caret => {
                        self.expect(Tok::LBrack)?;
                        let (name, span) = self.ident()?;
                        self.declare(&name, span)?;
                        self.expect(Tok::Colon)?;
                        let prob = self.probability()?;
                        self.expect(Tok::RBrack)?;
                        let right = self.seq()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Nature { name, prob, left: Box::new(left), right: Box::new(right) })
                    }
                    other => Err(ParseError::syntax(
                        op.span,
                        format!("expected `)`, `/` or `^`, found {}", other.describe()),
                    )),
                }
            }
            Tok::Lt => {
                self.bump();
                self.expect(Tok::LBrack)?;
                let (name, span) = self.ident()?;
                self.declare(&name, span)?;
                self.expect(Tok::Colon)?;
                let prob = self.probability()?;
                self.expect(Tok::Comma)?;
                let (kw, kw_span) = self.ident()?;
                if kw != "max" {
                    return Err(ParseError::syntax(kw_span, format!("expected `max`, found `{kw}`")));
                }
                let (max, max_span) = self.positive_int("loop bound")?;
                let max = u32::try_from(max).map_err(|_| ParseError::semantic(max_span, "loop bound is too large"))?;
                self.expect(Tok::RBrack)?;
                let body = self.seq()?;
                self.expect(Tok::Gt)?;
                Ok(Expr::Loop { name, prob, max, body: Box::new(body) })
            }
            other => Err(ParseError::syntax(t.span, format!("expected a task or `(` or `<`, found {}", other.describe()))),
        }
    }

    fn task(&mut self) -> Result<Expr, ParseError> {
        let (name, name_span) = self.ident()?;
        self.declare(&name, name_span)?;
        let open = self.expect(Tok::LBrack)?;
        let mut impact = vec![self.number()?.0];
        while self.peek().tok == Tok::Comma {
            self.bump();
            impact.push(self.number()?.0);
        }
        let close = self.expect(Tok::RBrack)?;
        let bracket_span = SourceSpan {
            line: open.span.line,
            column: open.span.column,
            length: if close.span.line == open.span.line { close.span.column + 1 - open.span.column } else { 1 },
        };
        match self.impact_dim {
            None => self.impact_dim = Some(impact.len()),
            Some(k) if k != impact.len() => {
                return Err(ParseError::semantic(
                    bracket_span,
                    format!("inconsistent impact dimension: expected {k}, found {}", impact.len()),
                ))
            }
            Some(_) => {}
        }
        self.expect(Tok::LBrace)?;
        let (duration, _) = self.positive_int("duration")?;
        self.expect(Tok::RBrace)?;
        Ok(Expr::Task { name, impact, duration })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::ParseErrorKind;

    #[test]
    fn spans_point_at_offending_token() {
        let err = parse_expr("A[1]{1},\n  B[2]{0}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Semantic);
        assert_eq!((err.span.line, err.span.column), (2, 8));
        assert!(err.message.contains("non-positive duration"));

        let err = parse_expr("A[1]{1} B[1]{1}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!((err.span.line, err.span.column), (1, 9));
    }

    #[test]
    fn fractions_and_comments() {
        let e = parse_expr("// header\n(A[1/2]{1} ^ [N: 1/3] B[0.5]{2})").unwrap();
        match e {
            Expr::Nature { prob, .. } => assert_eq!(prob, crate::rational::ratio(1, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_bar_rejected() {
        let err = parse_expr("A[1]{1} | B[1]{1}").unwrap_err();
        assert_eq!(err.span.column, 9);
    }

    #[test]
    fn empty_input() {
        assert!(parse_expr("   ").is_err());
    }
}
