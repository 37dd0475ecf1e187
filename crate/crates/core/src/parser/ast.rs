//! Expression tree of the DSL and its canonical rendering.

use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Task { name: String, impact: Vec<Rational>, duration: u64 },
    /// At least two items.
    Seq(Vec<Expr>),
    /// At least two items.
    Par(Vec<Expr>),
    Choice { name: String, left: Box<Expr>, right: Box<Expr> },
    /// `prob` is the probability of `left`.
    Nature { name: String, prob: Rational, left: Box<Expr>, right: Box<Expr> },
    /// `prob` is the probability of running the body again.
    Loop { name: String, prob: Rational, max: u32, body: Box<Expr> },
}

impl Expr {
    /// Flattening constructor: nested sequences are spliced, singletons unwrapped.
    pub fn seq(items: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Expr::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::Seq(flat)
        }
    }

    /// Builds a parallel composition. Nested compositions are kept as
    /// written, since parenthesised groups change the gateway structure.
    pub fn par(mut items: Vec<Expr>) -> Expr {
        if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Par(items)
        }
    }

    /// Number of tasks.
    pub fn task_count(&self) -> usize {
        match self {
            Expr::Task { .. } => 1,
            Expr::Seq(items) | Expr::Par(items) => items.iter().map(Expr::task_count).sum(),
            Expr::Choice { left, right, .. } | Expr::Nature { left, right, .. } => left.task_count() + right.task_count(),
            Expr::Loop { body, .. } => body.task_count(),
        }
    }

    /// Canonical DSL text; parsing it yields an equal tree.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_seq(&mut out);
        out
    }

    fn render_seq(&self, out: &mut String) {
        match self {
            Expr::Seq(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.render_par(out);
                }
            }
            other => other.render_par(out),
        }
    }

    fn render_par(&self, out: &mut String) {
        match self {
            Expr::Par(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" || ");
                    }
                    item.render_atom(out);
                }
            }
            other => other.render_atom(out),
        }
    }

    fn render_atom(&self, out: &mut String) {
        match self {
            Expr::Task { name, impact, duration } => {
                let nums: Vec<String> = impact.iter().map(format_rational).collect();
                out.push_str(&format!("{name}[{}]{{{duration}}}", nums.join(", ")));
            }
            Expr::Seq(_) | Expr::Par(_) => {
                out.push('(');
                self.render_seq(out);
                out.push(')');
            }
            Expr::Choice { name, left, right } => {
                out.push('(');
                left.render_seq(out);
                out.push_str(&format!(" / [{name}] "));
                right.render_seq(out);
                out.push(')');
            }
            Expr::Nature { name, prob, left, right } => {
                out.push('(');
                left.render_seq(out);
                out.push_str(&format!(" ^ [{name}: {}] ", format_rational(prob)));
                right.render_seq(out);
                out.push(')');
            }
            Expr::Loop { name, prob, max, body } => {
                out.push_str(&format!("<[{name}: {}, max {max}] ", format_rational(prob)));
                body.render_seq(out);
                out.push('>');
            }
        }
    }
}
