//! Bounded unraveling of nature-governed loops into nested acyclic copies.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use thiserror::Error;

use super::{BpmnCpi, Gateway, NodeId, NodeKind, ProcessError, SeseDiagram};
use crate::rational::Rational;

/// A loop closed by the nature split `loop_node`: with probability
/// `repeat_prob` the body runs again, at most `max_iterations` times in total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopSpec {
    pub loop_node: NodeId,
    pub repeat_prob: Rational,
    pub max_iterations: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnravelError {
    #[error("loop node `{0}` does not exist or is not an exclusive split")]
    NotASplit(NodeId),
    #[error("loop node `{0}` is a choice; only nature-governed loops are supported")]
    ChoiceGoverned(NodeId),
    #[error("loop `{0}` needs max_iterations >= 1 and repeat_prob in [0, 1]")]
    BadSpec(NodeId),
    #[error("loop node `{0}` is declared twice")]
    Duplicate(NodeId),
    #[error("loop node `{0}` is not on a cycle")]
    NotOnCycle(NodeId),
    #[error("loop at `{node}` is malformed: {reason}")]
    Malformed { node: NodeId, reason: String },
    #[error("loop regions of `{0}` and `{1}` overlap without nesting")]
    Overlapping(NodeId, NodeId),
    #[error("unannotated cycle through {0}")]
    UnannotatedCycle(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

struct Region {
    split: NodeId,
    header: NodeId,
    nodes: BTreeSet<NodeId>,
}

/// Replaces every declared loop by `max_iterations` nested copies of its body.
///
/// Copy `i` of node `v` is named `v#i`. Each copy keeps `repeat_prob` on its
/// "iterate again" branch except the innermost one, whose iterate branch
/// (probability 0) is routed to the exit through an event node
/// `<loop>.stop#<max>`. Inner loops are unraveled first, so nested copies
/// accumulate suffixes (`A#1#2`).
pub fn unravel_loops(process: &BpmnCpi, specs: &[LoopSpec]) -> Result<BpmnCpi, UnravelError> {
    let mut seen = BTreeSet::new();
    for spec in specs {
        let node = &spec.loop_node;
        if process.diagram().kind(node) != Some(NodeKind::Split(Gateway::Exclusive)) {
            return Err(UnravelError::NotASplit(node.clone()));
        }
        if process.nature_prob(node).is_none() {
            return Err(UnravelError::ChoiceGoverned(node.clone()));
        }
        if spec.max_iterations == 0 || spec.repeat_prob < Rational::zero() || spec.repeat_prob > Rational::one() {
            return Err(UnravelError::BadSpec(node.clone()));
        }
        if !seen.insert(node.clone()) {
            return Err(UnravelError::Duplicate(node.clone()));
        }
    }

    let (mut diagram, mut probs, mut impacts, mut durations) = process.clone().into_parts();
    let mut pending: Vec<&LoopSpec> = specs.iter().collect();
    while !pending.is_empty() {
        let regions = pending
            .iter()
            .map(|s| loop_region(&diagram, &s.loop_node))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, a) in regions.iter().enumerate() {
            for b in &regions[i + 1..] {
                let nested = a.nodes.is_subset(&b.nodes) || b.nodes.is_subset(&a.nodes);
                if !nested && !a.nodes.is_disjoint(&b.nodes) {
                    return Err(UnravelError::Overlapping(a.split.clone(), b.split.clone()));
                }
            }
        }
        let (idx, region) = regions
            .into_iter()
            .enumerate()
            .min_by_key(|(_, r)| (r.nodes.len(), r.split.clone()))
            .unwrap();
        let spec = pending.remove(idx);
        let mut state = Annotations { probs: &mut probs, impacts: &mut impacts, durations: &mut durations };
        unravel_one(&mut diagram, &mut state, &region, spec)?;
    }

    if !diagram.is_acyclic() {
        let on_cycle: Vec<&str> = diagram
            .nodes()
            .map(|(id, _)| id)
            .filter(|id| reaches(&diagram, id, id))
            .collect();
        return Err(UnravelError::UnannotatedCycle(on_cycle.join(", ")));
    }
    Ok(BpmnCpi::new(diagram, probs, impacts, durations)?)
}

struct Annotations<'a> {
    probs: &'a mut BTreeMap<NodeId, Rational>,
    impacts: &'a mut BTreeMap<NodeId, crate::rational::Impact>,
    durations: &'a mut BTreeMap<NodeId, u64>,
}

/// True if `to` is reachable from `from` by a non-empty path.
fn reaches(diagram: &SeseDiagram, from: &str, to: &str) -> bool {
    let mut stack: Vec<&str> = diagram.successors(from).collect();
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == to {
            return true;
        }
        if seen.insert(n) {
            stack.extend(diagram.successors(n));
        }
    }
    false
}

fn dominators(diagram: &SeseDiagram) -> Option<BTreeMap<NodeId, BTreeSet<NodeId>>> {
    let sources = diagram.sources();
    let [source] = sources.as_slice() else { return None };
    let all: BTreeSet<NodeId> = diagram.nodes().map(|(id, _)| id.to_string()).collect();
    let mut dom: BTreeMap<NodeId, BTreeSet<NodeId>> =
        all.iter().map(|n| (n.clone(), all.clone())).collect();
    dom.insert(source.to_string(), BTreeSet::from([source.to_string()]));
    let mut changed = true;
    while changed {
        changed = false;
        for n in &all {
            if n == source {
                continue;
            }
            let mut acc: Option<BTreeSet<NodeId>> = None;
            for p in diagram.predecessors(n) {
                acc = Some(match acc {
                    None => dom[p].clone(),
                    Some(a) => a.intersection(&dom[p]).cloned().collect(),
                });
            }
            let mut next = acc.unwrap_or_default();
            next.insert(n.clone());
            if next != dom[n] {
                dom.insert(n.clone(), next);
                changed = true;
            }
        }
    }
    Some(dom)
}

fn loop_region(diagram: &SeseDiagram, split: &str) -> Result<Region, UnravelError> {
    let malformed = |reason: &str| UnravelError::Malformed { node: split.to_string(), reason: reason.to_string() };
    if !diagram.successors(split).any(|s| s == split || reaches(diagram, s, split)) {
        return Err(UnravelError::NotOnCycle(split.to_string()));
    }
    let dom = dominators(diagram).ok_or_else(|| malformed("diagram has no unique source"))?;
    let headers: Vec<&str> = diagram.successors(split).filter(|s| dom[split].contains(*s)).collect();
    let [header] = headers.as_slice() else {
        return Err(malformed("exactly one branch must return to a header dominating the split"));
    };
    if diagram.kind(header) != Some(NodeKind::Join(Gateway::Exclusive)) || diagram.in_degree(header) != 2 {
        return Err(malformed("loop header must be an exclusive join"));
    }
    // natural loop of the back edge split -> header
    let mut nodes = BTreeSet::from([header.to_string(), split.to_string()]);
    let mut stack = vec![split.to_string()];
    while let Some(n) = stack.pop() {
        for p in diagram.predecessors(&n) {
            if nodes.insert(p.to_string()) {
                stack.push(p.to_string());
            }
        }
    }
    Ok(Region { split: split.to_string(), header: header.to_string(), nodes })
}

fn unravel_one(
    diagram: &mut SeseDiagram,
    ann: &mut Annotations<'_>,
    region: &Region,
    spec: &LoopSpec,
) -> Result<(), UnravelError> {
    let split = region.split.as_str();
    let header = region.header.as_str();
    let malformed = |reason: &str| UnravelError::Malformed { node: split.to_string(), reason: reason.to_string() };

    let entry: Vec<String> = diagram.predecessors(header).filter(|p| *p != split).map(str::to_string).collect();
    let [entry] = entry.as_slice() else { return Err(malformed("header needs one entry edge")) };
    if region.nodes.contains(entry) {
        return Err(malformed("header entered from inside the loop"));
    }
    let exit: Vec<String> = diagram.successors(split).filter(|s| *s != header).map(str::to_string).collect();
    let [exit] = exit.as_slice() else { return Err(malformed("loop split needs one exit edge")) };
    let repeat_is_default = diagram.is_default_edge(split, header);
    let entry_was_default = diagram.is_default_edge(entry, header);
    let body_head: String = diagram.successors(header).next().ok_or_else(|| malformed("empty header"))?.to_string();

    let body: BTreeSet<NodeId> = region.nodes.iter().filter(|n| *n != split && *n != header).cloned().collect();
    let body_edges: Vec<(NodeId, NodeId)> = diagram
        .edges()
        .filter(|(u, v)| body.contains(*u) && (body.contains(*v) || *v == split))
        .map(|(u, v)| (u.to_string(), v.to_string()))
        .collect();
    let body_defaults: BTreeSet<(NodeId, NodeId)> =
        diagram.default_edges().iter().filter(|(u, _)| body.contains(u)).cloned().collect();
    let kinds: BTreeMap<NodeId, NodeKind> = body.iter().map(|n| (n.clone(), diagram.kind(n).unwrap())).collect();
    let old_probs: BTreeMap<NodeId, Rational> =
        body.iter().filter_map(|n| ann.probs.remove(n).map(|p| (n.clone(), p))).collect();
    let old_impacts: BTreeMap<NodeId, crate::rational::Impact> =
        body.iter().filter_map(|n| ann.impacts.remove(n).map(|v| (n.clone(), v))).collect();
    let old_durations: BTreeMap<NodeId, u64> =
        body.iter().filter_map(|n| ann.durations.remove(n).map(|d| (n.clone(), d))).collect();

    for n in body.iter().map(String::as_str).chain([split, header]) {
        diagram.remove_node(n);
    }
    ann.probs.remove(split);

    let max = spec.max_iterations;
    let copy = |n: &str, i: u32| format!("{n}#{i}");
    let head_of = |i: u32| if body_head == split { copy(split, i) } else { copy(&body_head, i) };
    let stop = format!("{split}.stop#{max}");

    for i in 1..=max {
        for (n, kind) in &kinds {
            diagram.add_node(copy(n, i), *kind).map_err(|e| malformed(&e.to_string()))?;
        }
        diagram.add_node(copy(split, i), NodeKind::Split(Gateway::Exclusive)).map_err(|e| malformed(&e.to_string()))?;
        diagram.add_node(copy(header, i), NodeKind::Join(Gateway::Exclusive)).map_err(|e| malformed(&e.to_string()))?;
    }
    diagram.add_node(stop.clone(), NodeKind::Event).map_err(|e| malformed(&e.to_string()))?;

    for i in 1..=max {
        for (u, v) in &body_edges {
            diagram.add_edge(&copy(u, i), &copy(v, i)).unwrap();
        }
        for (u, v) in &body_defaults {
            diagram.set_default_edge(&copy(u, i), &copy(v, i)).unwrap();
        }
        for (n, p) in &old_probs {
            ann.probs.insert(copy(n, i), p.clone());
        }
        for (n, v) in &old_impacts {
            ann.impacts.insert(copy(n, i), v.clone());
        }
        for (n, d) in &old_durations {
            ann.durations.insert(copy(n, i), *d);
        }

        let this_split = copy(split, i);
        let this_join = copy(header, i);
        let again = if i < max { head_of(i + 1) } else { stop.clone() };
        diagram.add_edge(&this_split, &this_join).unwrap();
        diagram.add_edge(&this_split, &again).unwrap();
        if i == max {
            diagram.add_edge(&stop, &this_join).unwrap();
        } else {
            diagram.add_edge(&copy(header, i + 1), &this_join).unwrap();
        }
        let repeat = if i < max { spec.repeat_prob.clone() } else { Rational::zero() };
        if repeat_is_default {
            diagram.set_default_edge(&this_split, &again).unwrap();
            ann.probs.insert(this_split, repeat);
        } else {
            diagram.set_default_edge(&this_split, &this_join).unwrap();
            ann.probs.insert(this_split, Rational::one() - repeat);
        }
    }
    diagram.add_edge(entry, &head_of(1)).unwrap();
    if entry_was_default {
        diagram.set_default_edge(entry, &head_of(1)).unwrap();
    }
    diagram.add_edge(&copy(header, 1), exit).unwrap();
    Ok(())
}
