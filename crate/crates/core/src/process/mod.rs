//! BPMN+CPI process model: SESE diagrams whose splits may carry nature
//! probabilities and whose tasks carry impacts and durations.

mod structure;
mod unravel;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::rational::{Impact, Rational};

pub(crate) use structure::postdominator_tree;
pub use structure::{match_blocks, topological_order, Blocks, StructureError};
pub use unravel::{unravel_loops, LoopSpec, UnravelError};

pub type NodeId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Gateway {
    Exclusive,
    Parallel,
}

/// Node classification. Splits and joins carry the gateway flavour: the
/// exclusive ones are resolved either by nature or by the controller, the
/// parallel ones fork and synchronise branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Event,
    Task,
    Split(Gateway),
    Join(Gateway),
}

impl NodeKind {
    pub fn is_split(self) -> bool {
        matches!(self, NodeKind::Split(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(NodeId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("edge ({0}, {1}) does not exist")]
    UnknownEdge(NodeId, NodeId),
}

/// A directed graph with typed nodes and a set of default edges.
///
/// Any graph can be represented; [`validate_sese`] decides whether it is a
/// structured single-entry-single-exit diagram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeseDiagram {
    kinds: BTreeMap<NodeId, NodeKind>,
    succ: BTreeMap<NodeId, BTreeSet<NodeId>>,
    pred: BTreeMap<NodeId, BTreeSet<NodeId>>,
    default_edges: BTreeSet<(NodeId, NodeId)>,
}

impl SeseDiagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<NodeId>, kind: NodeKind) -> Result<(), DiagramError> {
        let id = id.into();
        if self.kinds.contains_key(&id) {
            return Err(DiagramError::DuplicateNode(id));
        }
        self.succ.insert(id.clone(), BTreeSet::new());
        self.pred.insert(id.clone(), BTreeSet::new());
        self.kinds.insert(id, kind);
        Ok(())
    }

    pub fn add_edge(&mut self, from: &str, to: &str) -> Result<(), DiagramError> {
        for id in [from, to] {
            if !self.kinds.contains_key(id) {
                return Err(DiagramError::UnknownNode(id.to_string()));
            }
        }
        self.succ.get_mut(from).unwrap().insert(to.to_string());
        self.pred.get_mut(to).unwrap().insert(from.to_string());
        Ok(())
    }

    pub fn set_default_edge(&mut self, from: &str, to: &str) -> Result<(), DiagramError> {
        if !self.has_edge(from, to) {
            return Err(DiagramError::UnknownEdge(from.to_string(), to.to_string()));
        }
        self.default_edges.insert((from.to_string(), to.to_string()));
        Ok(())
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.succ.get(from).is_some_and(|s| s.contains(to))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, NodeKind)> {
        self.kinds.iter().map(|(id, k)| (id.as_str(), *k))
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, id: &str) -> Option<NodeKind> {
        self.kinds.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.kinds.contains_key(id)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.succ
            .iter()
            .flat_map(|(u, vs)| vs.iter().map(move |v| (u.as_str(), v.as_str())))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.values().map(BTreeSet::len).sum()
    }

    pub fn default_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.default_edges
    }

    pub fn is_default_edge(&self, from: &str, to: &str) -> bool {
        self.default_edges.contains(&(from.to_string(), to.to_string()))
    }

    pub fn successors(&self, id: &str) -> impl Iterator<Item = &str> {
        self.succ.get(id).into_iter().flatten().map(String::as_str)
    }

    pub fn predecessors(&self, id: &str) -> impl Iterator<Item = &str> {
        self.pred.get(id).into_iter().flatten().map(String::as_str)
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.succ.get(id).map_or(0, BTreeSet::len)
    }

    pub fn in_degree(&self, id: &str) -> usize {
        self.pred.get(id).map_or(0, BTreeSet::len)
    }

    /// Successors of a split with the default edge first.
    pub fn ordered_successors(&self, id: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self.successors(id).collect();
        out.sort_by_key(|v| !self.is_default_edge(id, v));
        out
    }

    pub fn sources(&self) -> Vec<&str> {
        self.kinds.keys().filter(|id| self.in_degree(id) == 0).map(String::as_str).collect()
    }

    pub fn sinks(&self) -> Vec<&str> {
        self.kinds.keys().filter(|id| self.out_degree(id) == 0).map(String::as_str).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        topological_order(self).is_some()
    }

    pub fn splits(&self) -> impl Iterator<Item = (&str, Gateway)> {
        self.nodes().filter_map(|(id, k)| match k {
            NodeKind::Split(g) => Some((id, g)),
            _ => None,
        })
    }

    pub fn tasks(&self) -> impl Iterator<Item = &str> {
        self.nodes().filter(|(_, k)| *k == NodeKind::Task).map(|(id, _)| id)
    }

    pub(crate) fn remove_node(&mut self, id: &str) {
        self.kinds.remove(id);
        if let Some(out) = self.succ.remove(id) {
            for v in out {
                self.pred.get_mut(&v).map(|p| p.remove(id));
            }
        }
        if let Some(inc) = self.pred.remove(id) {
            for u in inc {
                self.succ.get_mut(&u).map(|s| s.remove(id));
            }
        }
        self.default_edges.retain(|(u, v)| u != id && v != id);
    }

    pub(crate) fn remove_edge(&mut self, from: &str, to: &str) {
        self.succ.get_mut(from).map(|s| s.remove(to));
        self.pred.get_mut(to).map(|p| p.remove(from));
        self.default_edges.remove(&(from.to_string(), to.to_string()));
    }
}

/// The clause of the SESE definition a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeseClause {
    EventDegree,
    EntryExit,
    TaskDegree,
    SplitDegree,
    DefaultEdge,
    JoinDegree,
    Acyclic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub clause: SeseClause,
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(n) => write!(f, "{:?} at `{}`: {}", self.clause, n, self.message),
            None => write!(f, "{:?}: {}", self.clause, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, clause: SeseClause) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }

    fn push(&mut self, clause: SeseClause, node: Option<&str>, message: impl Into<String>) {
        self.violations.push(Violation {
            clause,
            node: node.map(str::to_string),
            message: message.into(),
        });
    }
}

/// Checks the six SESE clauses plus acyclicity. Violations are reported,
/// never raised.
pub fn validate_sese(diagram: &SeseDiagram) -> ValidationReport {
    let mut report = ValidationReport::default();

    let sources = diagram.sources();
    let sinks = diagram.sinks();
    match sources.len() {
        0 => report.push(SeseClause::EntryExit, None, "no source node"),
        1 => {}
        _ => report.push(SeseClause::EntryExit, None, format!("multiple sources: {}", sources.join(", "))),
    }
    match sinks.len() {
        0 => report.push(SeseClause::EntryExit, None, "no sink node"),
        1 => {}
        _ => report.push(SeseClause::EntryExit, None, format!("multiple sinks: {}", sinks.join(", "))),
    }
    if sources.len() == 1 && sinks.len() == 1 && sources[0] == sinks[0] {
        report.push(SeseClause::EntryExit, Some(sources[0]), "source and sink coincide");
    }

    for (id, kind) in diagram.nodes() {
        let (inc, out) = (diagram.in_degree(id), diagram.out_degree(id));
        match kind {
            NodeKind::Event => {
                if inc > 1 || out > 1 || inc + out == 0 {
                    report.push(
                        SeseClause::EventDegree,
                        Some(id),
                        format!("event needs <=1 incoming, <=1 outgoing and >=1 edge (has {inc} in, {out} out)"),
                    );
                }
            }
            NodeKind::Task => {
                if inc != 1 || out != 1 {
                    report.push(
                        SeseClause::TaskDegree,
                        Some(id),
                        format!("task needs exactly 1 incoming and 1 outgoing edge (has {inc} in, {out} out)"),
                    );
                }
            }
            NodeKind::Split(_) => {
                if out != 2 {
                    report.push(SeseClause::SplitDegree, Some(id), format!("split out-degree ≠ 2 (is {out})"));
                }
                if inc != 1 {
                    report.push(SeseClause::SplitDegree, Some(id), format!("split in-degree ≠ 1 (is {inc})"));
                }
                let defaults = diagram.successors(id).filter(|v| diagram.is_default_edge(id, v)).count();
                if defaults != 1 {
                    report.push(
                        SeseClause::DefaultEdge,
                        Some(id),
                        format!("split needs exactly one default edge (has {defaults})"),
                    );
                }
            }
            NodeKind::Join(_) => {
                if inc != 2 {
                    report.push(SeseClause::JoinDegree, Some(id), format!("join in-degree ≠ 2 (is {inc})"));
                }
                if out != 1 {
                    report.push(SeseClause::JoinDegree, Some(id), format!("join out-degree ≠ 1 (is {out})"));
                }
            }
        }
    }

    for (u, v) in diagram.default_edges() {
        if !diagram.kind(u).is_some_and(NodeKind::is_split) {
            report.push(
                SeseClause::DefaultEdge,
                Some(u),
                format!("default edge ({u}, {v}) does not leave a split"),
            );
        }
    }

    if !diagram.is_acyclic() {
        report.push(SeseClause::Acyclic, None, "diagram contains a cycle");
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("nature probability on `{0}`, which is not an exclusive split")]
    NatureOnNonSplit(NodeId),
    #[error("probability {1} on `{0}` is outside [0, 1]")]
    ProbabilityOutOfRange(NodeId, String),
    #[error("task `{0}` has no impact vector")]
    MissingImpact(NodeId),
    #[error("task `{0}` has no duration")]
    MissingDuration(NodeId),
    #[error("`{0}` is not a task but carries an impact or duration")]
    NotATask(NodeId),
    #[error("task `{node}` has impact dimension {found}, expected {expected}")]
    DimensionMismatch { node: NodeId, expected: usize, found: usize },
    #[error("task `{0}` has a negative impact component")]
    NegativeImpact(NodeId),
    #[error("task `{0}` has a zero duration")]
    NonPositiveDuration(NodeId),
    #[error("process has no task")]
    NoTask,
}

/// Diagram, nature probabilities, impacts and durations of a process.
pub(crate) type ProcessParts = (SeseDiagram, BTreeMap<NodeId, Rational>, BTreeMap<NodeId, Impact>, BTreeMap<NodeId, u64>);

/// A SESE diagram together with its annotations.
///
/// `nature_prob(s)` is the probability of the default (left) edge of `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpmnCpi {
    diagram: SeseDiagram,
    nature_prob: BTreeMap<NodeId, Rational>,
    impact: BTreeMap<NodeId, Impact>,
    duration: BTreeMap<NodeId, u64>,
    impact_dim: usize,
}

impl BpmnCpi {
    /// Checks the annotation constraints; structural validity of the
    /// diagram is left to [`validate_sese`].
    pub fn new(
        diagram: SeseDiagram,
        nature_prob: BTreeMap<NodeId, Rational>,
        impact: BTreeMap<NodeId, Impact>,
        duration: BTreeMap<NodeId, u64>,
    ) -> Result<Self, ProcessError> {
        for (node, p) in &nature_prob {
            if diagram.kind(node) != Some(NodeKind::Split(Gateway::Exclusive)) {
                return Err(ProcessError::NatureOnNonSplit(node.clone()));
            }
            if *p < Rational::zero() || *p > Rational::one() {
                return Err(ProcessError::ProbabilityOutOfRange(node.clone(), crate::rational::format_rational(p)));
            }
        }
        for node in impact.keys().chain(duration.keys()) {
            if diagram.kind(node) != Some(NodeKind::Task) {
                return Err(ProcessError::NotATask(node.clone()));
            }
        }
        let mut dim = None;
        for task in diagram.tasks() {
            let vec = impact.get(task).ok_or_else(|| ProcessError::MissingImpact(task.to_string()))?;
            let expected = *dim.get_or_insert(vec.dim());
            if vec.dim() != expected {
                return Err(ProcessError::DimensionMismatch {
                    node: task.to_string(),
                    expected,
                    found: vec.dim(),
                });
            }
            if !vec.is_nonnegative() {
                return Err(ProcessError::NegativeImpact(task.to_string()));
            }
            match duration.get(task) {
                None => return Err(ProcessError::MissingDuration(task.to_string())),
                Some(0) => return Err(ProcessError::NonPositiveDuration(task.to_string())),
                Some(_) => {}
            }
        }
        let impact_dim = dim.ok_or(ProcessError::NoTask)?;
        Ok(BpmnCpi { diagram, nature_prob, impact, duration, impact_dim })
    }

    pub fn diagram(&self) -> &SeseDiagram {
        &self.diagram
    }

    pub fn impact_dim(&self) -> usize {
        self.impact_dim
    }

    pub fn nature_prob(&self, split: &str) -> Option<&Rational> {
        self.nature_prob.get(split)
    }

    pub fn nature_probs(&self) -> &BTreeMap<NodeId, Rational> {
        &self.nature_prob
    }

    pub fn impact(&self, task: &str) -> Option<&Impact> {
        self.impact.get(task)
    }

    pub fn impacts(&self) -> &BTreeMap<NodeId, Impact> {
        &self.impact
    }

    pub fn duration(&self, task: &str) -> Option<u64> {
        self.duration.get(task).copied()
    }

    pub fn durations(&self) -> &BTreeMap<NodeId, u64> {
        &self.duration
    }

    pub(crate) fn into_parts(self) -> ProcessParts {
        (self.diagram, self.nature_prob, self.impact, self.duration)
    }
}

/// Splits the exclusive splits into nature-resolved and controller-resolved
/// ones. Parallel splits belong to neither.
pub fn gateway_partition(process: &BpmnCpi) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let nature: BTreeSet<NodeId> = process.nature_prob.keys().cloned().collect();
    let choice = process
        .diagram
        .splits()
        .filter(|(id, g)| *g == Gateway::Exclusive && !nature.contains(*id))
        .map(|(id, _)| id.to_string())
        .collect();
    (nature, choice)
}
