//! Structural checks for nets: acyclicity, degree bounds, probabilistic
//! pairing and the region cover recorded at translation time.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::One;
use serde::Serialize;

use super::{Element, NetRegion, Spin};
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinClause {
    Acyclic,
    DegreeBound,
    ProbPairing,
    RegionCover,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpinViolation {
    pub clause: SpinClause,
    pub element: Option<String>,
    pub message: String,
}

impl fmt::Display for SpinViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.element {
            Some(e) => write!(f, "{:?} at `{e}`: {}", self.clause, self.message),
            None => write!(f, "{:?}: {}", self.clause, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SpinReport {
    pub violations: Vec<SpinViolation>,
}

impl SpinReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, clause: SpinClause) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }

    fn push(&mut self, clause: SpinClause, element: Option<&str>, message: impl Into<String>) {
        self.violations.push(SpinViolation { clause, element: element.map(str::to_string), message: message.into() });
    }
}

fn all_elements(net: &Spin) -> impl Iterator<Item = Element> {
    (0..net.place_count())
        .map(Element::Place)
        .chain((0..net.transition_count()).map(Element::Transition))
}

fn is_acyclic(net: &Spin) -> bool {
    // iterative three-colour DFS
    let index = |e: Element| match e {
        Element::Place(p) => p,
        Element::Transition(t) => net.place_count() + t,
    };
    let mut colour = vec![0u8; net.place_count() + net.transition_count()];
    for root in all_elements(net) {
        if colour[index(root)] != 0 {
            continue;
        }
        let mut stack = vec![(root, net.successors(root), 0usize)];
        colour[index(root)] = 1;
        while let Some((e, succ, i)) = stack.last_mut() {
            if *i < succ.len() {
                let next = succ[*i];
                *i += 1;
                match colour[index(next)] {
                    0 => {
                        colour[index(next)] = 1;
                        let s = net.successors(next);
                        stack.push((next, s, 0));
                    }
                    1 => return false,
                    _ => {}
                }
            } else {
                colour[index(*e)] = 2;
                stack.pop();
            }
        }
    }
    true
}

fn reachable_within(net: &Spin, region: &NetRegion, from: Element, forward: bool) -> BTreeSet<Element> {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(e) = stack.pop() {
        let next = if forward { net.successors(e) } else { net.predecessors(e) };
        for n in next {
            if region.members.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

fn check_region(net: &Spin, region: &NetRegion, report: &mut SpinReport) {
    let label = region.label.as_str();
    if !region.members.contains(&region.entry) || !region.members.contains(&region.exit) {
        report.push(SpinClause::RegionCover, Some(label), "entry or exit lies outside the region");
        return;
    }
    let entries: BTreeSet<Element> = region
        .members
        .iter()
        .copied()
        .filter(|&e| net.predecessors(e).iter().any(|p| !region.members.contains(p)))
        .collect();
    if entries.iter().any(|&e| e != region.entry) {
        report.push(SpinClause::RegionCover, Some(label), "region is entered at more than one element");
    }
    let exits: BTreeSet<Element> = region
        .members
        .iter()
        .copied()
        .filter(|&e| net.successors(e).iter().any(|s| !region.members.contains(s)))
        .collect();
    if exits.iter().any(|&e| e != region.exit) {
        report.push(SpinClause::RegionCover, Some(label), "region is left from more than one element");
    }
    if reachable_within(net, region, region.entry, true) != region.members {
        report.push(SpinClause::RegionCover, Some(label), "some element is unreachable from the region entry");
    }
    if reachable_within(net, region, region.exit, false) != region.members {
        report.push(SpinClause::RegionCover, Some(label), "the region exit is unreachable from some element");
    }
}

/// Checks a net against the structured-acyclic rules. Violations are
/// collected, never raised.
pub fn validate_structured_acyclic(net: &Spin) -> SpinReport {
    let mut report = SpinReport::default();

    if !is_acyclic(net) {
        report.push(SpinClause::Acyclic, None, "net contains a cycle");
    }

    for e in all_elements(net) {
        let (inc, out) = (net.predecessors(e).len(), net.successors(e).len());
        if inc > 2 || out > 2 || inc + out > 3 {
            report.push(
                SpinClause::DegreeBound,
                Some(net.element_name(e)),
                format!("degree bound violated ({inc} incoming, {out} outgoing)"),
            );
        }
    }

    for t in net.probabilistic_transitions() {
        let name = net.transition_name(t);
        let Ok(other) = net.switch_of(t) else {
            report.push(SpinClause::ProbPairing, Some(name), "probabilistic transition has no partner");
            continue;
        };
        if other < t {
            continue;
        }
        let (pa, pb) = (net.prob(t).unwrap(), net.prob(other).unwrap());
        let sum: Rational = pa + pb;
        if !sum.is_one() {
            report.push(
                SpinClause::ProbPairing,
                Some(name),
                format!("probabilistic pair not complementary (sum is {})", format_rational(&sum)),
            );
        }
        if net.inputs(t) != net.inputs(other) {
            report.push(SpinClause::ProbPairing, Some(name), "probabilistic pair has different incoming places");
        }
        if net.outputs(t).len() != 1 || net.outputs(other).len() != 1 {
            report.push(SpinClause::ProbPairing, Some(name), "probabilistic transition needs exactly one outgoing place");
        }
    }

    let regions = net.regions();
    for (i, a) in regions.iter().enumerate() {
        check_region(net, a, &mut report);
        for b in &regions[i + 1..] {
            let nested = a.members.is_subset(&b.members) || b.members.is_subset(&a.members);
            if !nested && !a.members.is_disjoint(&b.members) {
                report.push(
                    SpinClause::RegionCover,
                    Some(&a.label),
                    format!("region overlaps `{}` without nesting", b.label),
                );
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ratio, Impact};
    use crate::spin::{fixtures::fork_net, SpinBuilder};

    #[test]
    fn fork_net_is_valid() {
        let report = validate_structured_acyclic(&fork_net());
        assert!(report.is_ok(), "{report:?}");
    }

    #[test]
    fn three_inputs_violate_degree() {
        let mut b = SpinBuilder::new(1);
        for p in ["p0", "a", "b", "c", "pf"] {
            b.place(p, 0).unwrap();
        }
        b.transition("t0").unwrap().transition("t1").unwrap();
        for (u, v) in [("p0", "t0"), ("t0", "a"), ("t0", "b"), ("t0", "c"), ("a", "t1"), ("b", "t1"), ("c", "t1"), ("t1", "pf")] {
            b.arc(u, v).unwrap();
        }
        let report = validate_structured_acyclic(&b.build().unwrap());
        let v = report.violations.iter().find(|v| v.element.as_deref() == Some("t1")).unwrap();
        assert!(v.message.contains("degree bound violated"));
    }

    #[test]
    fn pair_must_sum_to_one() {
        let mut b = SpinBuilder::new(1);
        for p in ["p0", "a", "pf"] {
            b.place(p, 0).unwrap();
        }
        b.transition_with("x", Impact::zero(1), Some(ratio(1, 5))).unwrap();
        b.transition_with("y", Impact::zero(1), Some(ratio(7, 10))).unwrap();
        b.transition("z").unwrap();
        for (u, v) in [("p0", "x"), ("p0", "y"), ("x", "a"), ("y", "a"), ("a", "z"), ("z", "pf")] {
            b.arc(u, v).unwrap();
        }
        b.pair("x", "y").unwrap();
        let report = validate_structured_acyclic(&b.build().unwrap());
        assert!(report.violations.iter().any(|v| v.message.contains("probabilistic pair not complementary")));
    }
}
