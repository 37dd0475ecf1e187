//! Translation of acyclic block-structured processes into nets.
//!
//! Each diagram node maps to a small fragment:
//!
//! | node            | fragment                                   |
//! |-----------------|--------------------------------------------|
//! | event `e`       | place `e`                                  |
//! | task `v`        | `v.in` -> place `v` (duration) -> `v.out`  |
//! | exclusive split | place `s` feeding `s.left` and `s.right`   |
//! | exclusive join  | place `j`                                  |
//! | parallel gateway| transition named after the gateway         |
//!
//! An edge between two places gets a silent transition named `u->v`, and an
//! edge between two transitions gets a zero-duration place with that name.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use super::{Spin, SpinBuilder, SpinError};
use crate::process::{match_blocks, BpmnCpi, Gateway, NodeId, NodeKind};
use crate::rational::{Impact, Rational};

/// Maps every gateway- or task-derived transition to its diagram node.
pub type ProvenanceMap = BTreeMap<String, NodeId>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Place,
    Trans,
}

pub fn translate_to_spin(process: &BpmnCpi) -> Result<(Spin, ProvenanceMap), SpinError> {
    let diagram = process.diagram();
    if !diagram.is_acyclic() {
        return Err(SpinError::Cyclic);
    }
    let blocks = match_blocks(diagram).map_err(|e| SpinError::Unstructured(e.to_string()))?;
    let mut b = SpinBuilder::new(process.impact_dim());
    let mut provenance = ProvenanceMap::new();
    let mut elements: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut entry: BTreeMap<&str, (String, Side)> = BTreeMap::new();

    for (id, kind) in diagram.nodes() {
        match kind {
            NodeKind::Event | NodeKind::Join(Gateway::Exclusive) => {
                b.place(id, 0)?;
                elements.insert(id, vec![id.to_string()]);
                entry.insert(id, (id.to_string(), Side::Place));
            }
            NodeKind::Task => {
                let (tin, tout) = (format!("{id}.in"), format!("{id}.out"));
                b.place(id, process.duration(id).unwrap_or(1))?;
                b.transition(tin.clone())?;
                let impact = process.impact(id).cloned().unwrap_or_else(|| Impact::zero(process.impact_dim()));
                b.transition_with(tout.clone(), impact, None)?;
                b.arc(&tin, id)?.arc(id, &tout)?;
                provenance.insert(tin.clone(), id.to_string());
                provenance.insert(tout.clone(), id.to_string());
                elements.insert(id, vec![tin.clone(), id.to_string(), tout]);
                entry.insert(id, (tin, Side::Trans));
            }
            NodeKind::Split(Gateway::Exclusive) => {
                let (left, right) = (format!("{id}.left"), format!("{id}.right"));
                b.place(id, 0)?;
                let zero = Impact::zero(process.impact_dim());
                match process.nature_prob(id) {
                    Some(p) => {
                        b.transition_with(left.clone(), zero.clone(), Some(p.clone()))?;
                        b.transition_with(right.clone(), zero, Some(Rational::one() - p))?;
                        b.pair(&left, &right)?;
                    }
                    None => {
                        b.transition(left.clone())?;
                        b.transition(right.clone())?;
                    }
                }
                b.arc(id, &left)?.arc(id, &right)?;
                provenance.insert(left.clone(), id.to_string());
                provenance.insert(right.clone(), id.to_string());
                elements.insert(id, vec![id.to_string(), left, right]);
                entry.insert(id, (id.to_string(), Side::Place));
            }
            NodeKind::Split(Gateway::Parallel) | NodeKind::Join(Gateway::Parallel) => {
                b.transition(id)?;
                provenance.insert(id.to_string(), id.to_string());
                elements.insert(id, vec![id.to_string()]);
                entry.insert(id, (id.to_string(), Side::Trans));
            }
        }
    }

    let exit_of = |u: &str, v: &str| -> (String, Side) {
        match diagram.kind(u).unwrap() {
            NodeKind::Task => (format!("{u}.out"), Side::Trans),
            NodeKind::Split(Gateway::Exclusive) => {
                let branch = if diagram.is_default_edge(u, v) { "left" } else { "right" };
                (format!("{u}.{branch}"), Side::Trans)
            }
            NodeKind::Split(Gateway::Parallel) | NodeKind::Join(Gateway::Parallel) => (u.to_string(), Side::Trans),
            NodeKind::Event | NodeKind::Join(Gateway::Exclusive) => (u.to_string(), Side::Place),
        }
    };

    let mut connectors: BTreeMap<(&str, &str), String> = BTreeMap::new();
    let mut connector_places: BTreeSet<String> = BTreeSet::new();
    for (u, v) in diagram.edges() {
        let (src, src_side) = exit_of(u, v);
        let (dst, dst_side) = entry[v].clone();
        if src_side != dst_side {
            b.arc(&src, &dst)?;
            continue;
        }
        let name = format!("{u}->{v}");
        if src_side == Side::Place {
            b.transition(name.clone())?;
        } else {
            b.place(name.clone(), 0)?;
            connector_places.insert(name.clone());
        }
        b.arc(&src, &name)?.arc(&name, &dst)?;
        connectors.insert((u, v), name);
    }

    let members_of = |nodes: &BTreeSet<NodeId>| -> BTreeSet<String> {
        let mut out: BTreeSet<String> = nodes.iter().flat_map(|n| elements[n.as_str()].iter().cloned()).collect();
        for ((u, v), c) in &connectors {
            if nodes.contains(*u) && nodes.contains(*v) {
                out.insert(c.clone());
            }
        }
        out
    };

    for task in diagram.tasks() {
        let members = elements[task].iter().cloned().collect();
        b.region(task, &format!("{task}.in"), &format!("{task}.out"), members);
    }
    for (split, join) in &blocks.join_of {
        let nodes = blocks.block_nodes(split);
        let after = diagram.successors(join).next().unwrap_or_default();
        b.region(split.clone(), &entry[split.as_str()].0, &exit_of(join, after).0, members_of(&nodes));

        let heads = diagram.ordered_successors(split);
        let mut sides: [BTreeSet<String>; 2] = Default::default();
        for (i, branch) in blocks.branches[split].iter().enumerate() {
            let head = heads[i];
            let lead_in = connectors.get(&(split.as_str(), head)).cloned();
            if branch.is_empty() {
                sides[i].extend(lead_in.filter(|c| connector_places.contains(c)));
                continue;
            }
            let tail = diagram.predecessors(join).find(|p| branch.contains(*p)).unwrap();
            b.region(format!("{split}[{i}]"), &entry[head].0, &exit_of(tail, join).0, members_of(branch));
            let lead_out = connectors.get(&(tail, join.as_str())).cloned();
            sides[i] = members_of(branch)
                .into_iter()
                .chain(lead_in)
                .chain(lead_out)
                .filter(|e| connector_places.contains(e) || diagram.contains(e))
                .filter(|e| !matches!(diagram.kind(e), Some(NodeKind::Split(Gateway::Parallel) | NodeKind::Join(Gateway::Parallel))))
                .collect();
        }
        if diagram.kind(split) == Some(NodeKind::Split(Gateway::Exclusive)) {
            let [l, r] = sides;
            b.exclusive_branches(l, r);
        }
    }

    Ok((b.build()?, provenance))
}
