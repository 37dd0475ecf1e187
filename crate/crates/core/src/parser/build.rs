//! Conversion between expression trees and process graphs.

use std::collections::BTreeMap;

use crate::process::{postdominator_tree, BpmnCpi, Gateway, LoopSpec, NodeId, NodeKind, SeseDiagram};
use crate::rational::{Impact, Rational};

use super::ast::Expr;
use super::{DecompileError, ParsedProcess};

pub const START: &str = "@start";
pub const END: &str = "@end";

pub fn join_name(split: &str) -> String {
    format!("{split}.join")
}

#[derive(Default)]
struct Builder {
    diagram: SeseDiagram,
    probs: BTreeMap<NodeId, Rational>,
    impacts: BTreeMap<NodeId, Impact>,
    durations: BTreeMap<NodeId, u64>,
    loops: Vec<LoopSpec>,
    par_count: usize,
}

impl Builder {
    fn node(&mut self, id: &str, kind: NodeKind) {
        self.diagram.add_node(id, kind).expect("identifiers are checked for duplicates while parsing");
    }

    fn edge(&mut self, from: &str, to: &str, default: bool) {
        self.diagram.add_edge(from, to).unwrap();
        if default {
            self.diagram.set_default_edge(from, to).unwrap();
        }
    }

    /// Returns the entry and exit node of the fragment.
    fn build(&mut self, expr: &Expr) -> (NodeId, NodeId) {
        match expr {
            Expr::Task { name, impact, duration } => {
                self.node(name, NodeKind::Task);
                self.impacts.insert(name.clone(), Impact::new(impact.clone()));
                self.durations.insert(name.clone(), *duration);
                (name.clone(), name.clone())
            }
            Expr::Seq(items) => {
                let mut parts = items.iter().map(|e| self.build(e)).collect::<Vec<_>>().into_iter();
                let (entry, mut exit) = parts.next().unwrap();
                for (e, x) in parts {
                    self.edge(&exit, &e, false);
                    exit = x;
                }
                (entry, exit)
            }
            Expr::Par(items) => self.build_par(items),
            Expr::Choice { name, left, right } => self.build_exclusive(name, left, right),
            Expr::Nature { name, prob, left, right } => {
                self.probs.insert(name.clone(), prob.clone());
                self.build_exclusive(name, left, right)
            }
            Expr::Loop { name, prob, max, body } => {
                let header = join_name(name);
                self.node(&header, NodeKind::Join(Gateway::Exclusive));
                let (entry, exit) = self.build(body);
                self.node(name, NodeKind::Split(Gateway::Exclusive));
                self.edge(&header, &entry, false);
                self.edge(&exit, name, false);
                self.edge(name, &header, true);
                self.probs.insert(name.clone(), prob.clone());
                self.loops.push(LoopSpec { loop_node: name.clone(), repeat_prob: prob.clone(), max_iterations: *max });
                (header, name.clone())
            }
        }
    }

    fn build_exclusive(&mut self, name: &str, left: &Expr, right: &Expr) -> (NodeId, NodeId) {
        let join = join_name(name);
        self.node(name, NodeKind::Split(Gateway::Exclusive));
        self.node(&join, NodeKind::Join(Gateway::Exclusive));
        for (branch, default) in [(left, true), (right, false)] {
            let (e, x) = self.build(branch);
            self.edge(name, &e, default);
            self.edge(&x, &join, false);
        }
        (name.to_string(), join)
    }

    fn build_par(&mut self, items: &[Expr]) -> (NodeId, NodeId) {
        if let [single] = items {
            return self.build(single);
        }
        self.par_count += 1;
        let split = format!("@par{}", self.par_count);
        let join = join_name(&split);
        self.node(&split, NodeKind::Split(Gateway::Parallel));
        self.node(&join, NodeKind::Join(Gateway::Parallel));
        let (le, lx) = self.build(&items[0]);
        let (re, rx) = self.build_par(&items[1..]);
        self.edge(&split, &le, true);
        self.edge(&split, &re, false);
        self.edge(&lx, &join, false);
        self.edge(&rx, &join, false);
        (split, join)
    }
}

/// Lays out an expression as a diagram between `@start` and `@end`. Loops
/// stay cyclic; their specs are returned alongside.
pub fn to_graph(expr: &Expr) -> ParsedProcess {
    let mut b = Builder::default();
    b.node(START, NodeKind::Event);
    let (entry, exit) = b.build(expr);
    b.node(END, NodeKind::Event);
    b.edge(START, &entry, false);
    b.edge(&exit, END, false);
    let process = BpmnCpi::new(b.diagram, b.probs, b.impacts, b.durations)
        .expect("annotations are checked while parsing");
    ParsedProcess { process, loops: b.loops }
}

/// Recovers an expression tree from a block-structured diagram with loops
/// shaped as produced by [`to_graph`].
pub fn to_expr(parsed: &ParsedProcess) -> Result<Expr, DecompileError> {
    let process = &parsed.process;
    let mut dag = process.diagram().clone();
    let mut headers: BTreeMap<NodeId, &LoopSpec> = BTreeMap::new();
    for spec in &parsed.loops {
        let split = &spec.loop_node;
        let back: Vec<NodeId> = dag
            .successors(split)
            .filter(|h| dag.kind(h) == Some(NodeKind::Join(Gateway::Exclusive)))
            .filter(|h| process.diagram().is_default_edge(split, h))
            .map(str::to_string)
            .collect();
        let [header] = back.as_slice() else {
            return Err(DecompileError(format!("loop `{split}` has no recognisable back edge")));
        };
        dag.remove_edge(split, header);
        headers.insert(header.clone(), spec);
    }
    let ipdom = postdominator_tree(&dag).map_err(|e| DecompileError(e.to_string()))?;
    let sources = dag.sources();
    let [source] = sources.as_slice() else {
        return Err(DecompileError("diagram needs a single source".into()));
    };
    let walker = Walker { process, dag: &dag, ipdom: &ipdom, headers: &headers };
    walker.walk(source, None)
}

struct Walker<'a> {
    process: &'a BpmnCpi,
    dag: &'a SeseDiagram,
    ipdom: &'a BTreeMap<NodeId, Option<NodeId>>,
    headers: &'a BTreeMap<NodeId, &'a LoopSpec>,
}

impl Walker<'_> {
    fn single_successor(&self, n: &str) -> Result<Option<NodeId>, DecompileError> {
        let succ: Vec<&str> = self.dag.successors(n).collect();
        match succ.as_slice() {
            [] => Ok(None),
            [s] => Ok(Some(s.to_string())),
            _ => Err(DecompileError(format!("`{n}` has several successors"))),
        }
    }

    fn walk(&self, start: &str, stop: Option<&str>) -> Result<Expr, DecompileError> {
        let mut items = Vec::new();
        let mut cursor = Some(start.to_string());
        while let Some(n) = cursor {
            if Some(n.as_str()) == stop {
                break;
            }
            let kind = self.dag.kind(&n).ok_or_else(|| DecompileError(format!("unknown node `{n}`")))?;
            cursor = match kind {
                NodeKind::Event => {
                    if self.dag.in_degree(&n) > 0 && self.dag.out_degree(&n) > 0 {
                        return Err(DecompileError(format!("intermediate event `{n}` has no textual form")));
                    }
                    self.single_successor(&n)?
                }
                NodeKind::Task => {
                    items.push(Expr::Task {
                        name: n.clone(),
                        impact: self.process.impact(&n).unwrap().components().to_vec(),
                        duration: self.process.duration(&n).unwrap(),
                    });
                    self.single_successor(&n)?
                }
                NodeKind::Join(Gateway::Exclusive) if self.headers.contains_key(&n) => {
                    let spec = self.headers[&n];
                    let head = self.single_successor(&n)?.ok_or_else(|| DecompileError(format!("empty loop `{n}`")))?;
                    let body = self.walk(&head, Some(&spec.loop_node))?;
                    items.push(Expr::Loop {
                        name: spec.loop_node.clone(),
                        prob: spec.repeat_prob.clone(),
                        max: spec.max_iterations,
                        body: Box::new(body),
                    });
                    self.single_successor(&spec.loop_node)?
                }
                NodeKind::Split(gateway) => {
                    let join = self.ipdom[&n].clone().ok_or_else(|| DecompileError(format!("split `{n}` is never closed")))?;
                    let heads = self.dag.ordered_successors(&n);
                    let [left, right] = heads.as_slice() else {
                        return Err(DecompileError(format!("split `{n}` needs two branches")));
                    };
                    if *left == join || *right == join {
                        return Err(DecompileError(format!("split `{n}` has an empty branch")));
                    }
                    let left = self.walk(left, Some(&join))?;
                    let right = self.walk(right, Some(&join))?;
                    items.push(match (gateway, self.process.nature_prob(&n)) {
                        (Gateway::Parallel, _) => {
                            let mut parts = vec![left];
                            match right {
                                Expr::Par(rest) => parts.extend(rest),
                                other => parts.push(other),
                            }
                            Expr::Par(parts)
                        }
                        (Gateway::Exclusive, Some(p)) => {
                            Expr::Nature { name: n.clone(), prob: p.clone(), left: Box::new(left), right: Box::new(right) }
                        }
                        (Gateway::Exclusive, None) => {
                            Expr::Choice { name: n.clone(), left: Box::new(left), right: Box::new(right) }
                        }
                    });
                    self.single_successor(&join)?
                }
                NodeKind::Join(_) => return Err(DecompileError(format!("join `{n}` reached outside its block"))),
            };
        }
        if items.is_empty() {
            return Err(DecompileError(format!("empty fragment at `{start}`")));
        }
        Ok(Expr::seq(items))
    }
}
