//! Block structure of acyclic diagrams: every split is paired with the join
//! that immediately post-dominates it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use super::{NodeId, NodeKind, SeseDiagram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("diagram is not acyclic")]
    Cyclic,
    #[error("diagram needs exactly one sink")]
    NoUniqueSink,
    #[error("split `{split}` is not closed by a matching join: {reason}")]
    Unstructured { split: NodeId, reason: String },
    #[error("join `{0}` closes no split")]
    UnmatchedJoin(NodeId),
}

/// Split/join pairing of a structured acyclic diagram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blocks {
    pub join_of: BTreeMap<NodeId, NodeId>,
    /// Nodes of each branch (default branch first), excluding split and join.
    pub branches: BTreeMap<NodeId, [BTreeSet<NodeId>; 2]>,
}

impl Blocks {
    /// All nodes of the block opened by `split`, split and join included.
    pub fn block_nodes(&self, split: &str) -> BTreeSet<NodeId> {
        let mut nodes: BTreeSet<NodeId> = self.branches[split].iter().flatten().cloned().collect();
        nodes.insert(split.to_string());
        nodes.insert(self.join_of[split].clone());
        nodes
    }
}

/// Kahn ordering with ties broken by node id; `None` on a cycle.
pub fn topological_order(diagram: &SeseDiagram) -> Option<Vec<NodeId>> {
    let mut indeg: BTreeMap<&str, usize> = diagram.nodes().map(|(id, _)| (id, diagram.in_degree(id))).collect();
    let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
    let mut order = Vec::with_capacity(indeg.len());
    while let Some(n) = ready.pop_first() {
        order.push(n.to_string());
        for s in diagram.successors(n) {
            let d = indeg.get_mut(s).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(s);
            }
        }
    }
    (order.len() == diagram.node_count()).then_some(order)
}

fn immediate_postdominators(
    diagram: &SeseDiagram,
    order: &[NodeId],
) -> Result<BTreeMap<NodeId, Option<NodeId>>, StructureError> {
    let sinks = diagram.sinks();
    if sinks.len() != 1 {
        return Err(StructureError::NoUniqueSink);
    }
    let mut ipdom: BTreeMap<NodeId, Option<NodeId>> = BTreeMap::new();
    let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
    for n in order.iter().rev() {
        let mut succs = diagram.successors(n);
        let Some(first) = succs.next() else {
            ipdom.insert(n.clone(), None);
            depth.insert(n.clone(), 0);
            continue;
        };
        let mut acc = first.to_string();
        for s in succs {
            let (mut a, mut b) = (acc.clone(), s.to_string());
            while a != b {
                if depth[&a] >= depth[&b] {
                    a = ipdom[&a].clone().expect("postdominator chains meet at the sink");
                } else {
                    b = ipdom[&b].clone().expect("postdominator chains meet at the sink");
                }
            }
            acc = a;
        }
        depth.insert(n.clone(), depth[&acc] + 1);
        ipdom.insert(n.clone(), Some(acc));
    }
    Ok(ipdom)
}

/// Immediate post-dominator of every node of an acyclic diagram with one sink.
pub(crate) fn postdominator_tree(diagram: &SeseDiagram) -> Result<BTreeMap<NodeId, Option<NodeId>>, StructureError> {
    let order = topological_order(diagram).ok_or(StructureError::Cyclic)?;
    immediate_postdominators(diagram, &order)
}

/// Pairs every split with its join and checks that each block is entered only
/// through its split and left only through its join.
pub fn match_blocks(diagram: &SeseDiagram) -> Result<Blocks, StructureError> {
    let order = topological_order(diagram).ok_or(StructureError::Cyclic)?;
    let ipdom = immediate_postdominators(diagram, &order)?;
    let mut blocks = Blocks::default();
    let mut closed: BTreeSet<NodeId> = BTreeSet::new();

    for (split, gateway) in diagram.splits() {
        let unstructured = |reason: String| StructureError::Unstructured { split: split.to_string(), reason };
        let join = ipdom[split].clone().ok_or_else(|| unstructured("no post-dominator".into()))?;
        if diagram.kind(&join) != Some(NodeKind::Join(gateway)) {
            return Err(unstructured(format!("post-dominator `{join}` is not a {gateway:?} join")));
        }
        if !closed.insert(join.clone()) {
            return Err(unstructured(format!("join `{join}` already closes another split")));
        }
        let heads = diagram.ordered_successors(split);
        if heads.len() != 2 {
            return Err(unstructured("split does not have two branches".into()));
        }
        let mut branches: [BTreeSet<NodeId>; 2] = Default::default();
        for (i, head) in heads.iter().enumerate() {
            let mut queue = VecDeque::from([head.to_string()]);
            while let Some(n) = queue.pop_front() {
                if n == join || !branches[i].insert(n.clone()) {
                    continue;
                }
                for s in diagram.successors(&n) {
                    queue.push_back(s.to_string());
                }
            }
        }
        if !branches[0].is_disjoint(&branches[1]) {
            return Err(unstructured("branches share nodes".into()));
        }
        let inner: BTreeSet<&str> = branches.iter().flatten().map(String::as_str).collect();
        for n in inner.iter().copied().chain([join.as_str()]) {
            if let Some(p) = diagram.predecessors(n).find(|p| *p != split && !inner.contains(p)) {
                return Err(unstructured(format!("`{n}` is entered from `{p}` outside the block")));
            }
        }
        blocks.join_of.insert(split.to_string(), join);
        blocks.branches.insert(split.to_string(), branches);
    }

    for (id, kind) in diagram.nodes() {
        if matches!(kind, NodeKind::Join(_)) && !closed.contains(id) {
            return Err(StructureError::UnmatchedJoin(id.to_string()));
        }
    }
    Ok(blocks)
}
