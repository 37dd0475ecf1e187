//! Executable timed semantics of nets: markings, enabledness, waiting,
//! maximal non-conflicting enabled sets and saturating steps.

mod computation;

use std::fmt;

use thiserror::Error;

use crate::spin::{PlaceIdx, Spin, TransIdx};

pub use computation::{play_measures, Computation, Step};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("deadlocked marking: no transition can ever become enabled")]
    Deadlock,
    #[error("marking is not saturated")]
    NotSaturated,
    #[error("transition set is not a maximal non-conflicting enabled set here")]
    NotMnce,
    #[error("marking does not fit the net")]
    Malformed,
}

/// A timed marking: each place holds an age or is empty (`None`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkingState {
    ages: Vec<Option<u64>>,
}

impl MarkingState {
    pub fn empty(net: &Spin) -> Self {
        MarkingState { ages: vec![None; net.place_count()] }
    }

    /// Only the initial place is marked, at age 0.
    pub fn initial(net: &Spin) -> Self {
        let mut q = Self::empty(net);
        q.ages[net.p0()] = Some(0);
        q
    }

    pub fn from_ages(ages: Vec<Option<u64>>) -> Self {
        MarkingState { ages }
    }

    pub fn age(&self, p: PlaceIdx) -> Option<u64> {
        self.ages[p]
    }

    pub fn set(&mut self, p: PlaceIdx, age: Option<u64>) {
        self.ages[p] = age;
    }

    pub fn ages(&self) -> &[Option<u64>] {
        &self.ages
    }

    pub fn marked(&self) -> impl Iterator<Item = (PlaceIdx, u64)> + '_ {
        self.ages.iter().enumerate().filter_map(|(p, a)| a.map(|a| (p, a)))
    }

    pub fn is_final(&self, net: &Spin) -> bool {
        self.ages[net.pf()].is_some()
    }

    /// `place:age` pairs in place order, space separated.
    pub fn render(&self, net: &Spin) -> String {
        self.marked()
            .map(|(p, a)| format!("{}:{a}", net.place_name(p)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A maximal non-conflicting enabled transition set, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mnce(Vec<TransIdx>);

impl Mnce {
    /// Wraps a set without checking the defining properties.
    pub fn from_unchecked(mut transitions: Vec<TransIdx>) -> Self {
        transitions.sort_unstable();
        transitions.dedup();
        Mnce(transitions)
    }

    pub fn transitions(&self) -> &[TransIdx] {
        &self.0
    }

    pub fn contains(&self, t: TransIdx) -> bool {
        self.0.binary_search(&t).is_ok()
    }

    /// Non-probabilistic members.
    pub fn plain_part(&self, net: &Spin) -> Vec<TransIdx> {
        self.0.iter().copied().filter(|&t| !net.is_probabilistic(t)).collect()
    }

    /// Probabilistic members.
    pub fn prob_part(&self, net: &Spin) -> Vec<TransIdx> {
        self.0.iter().copied().filter(|&t| net.is_probabilistic(t)).collect()
    }

    pub fn names<'a>(&self, net: &'a Spin) -> Vec<&'a str> {
        self.0.iter().map(|&t| net.transition_name(t)).collect()
    }

    pub fn render(&self, net: &Spin) -> String {
        format!("{{{}}}", self.names(net).join(","))
    }
}

impl fmt::Display for Mnce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

pub fn is_enabled(net: &Spin, q: &MarkingState, t: TransIdx) -> bool {
    net.inputs(t).iter().all(|&p| q.age(p).is_some_and(|a| a >= net.duration(p)))
}

/// Transitions whose every input place holds a token at least as old as the
/// place duration.
pub fn enabled_transitions(net: &Spin, q: &MarkingState) -> Vec<TransIdx> {
    (0..net.transition_count()).filter(|&t| is_enabled(net, q, t)).collect()
}

/// A marking is saturated when something is enabled; final markings count
/// as saturated too.
pub fn is_saturated(net: &Spin, q: &MarkingState) -> bool {
    q.is_final(net) || (0..net.transition_count()).any(|t| is_enabled(net, q, t))
}

/// One unit of time: every marked place ages by 1.
pub fn wait_step(q: &MarkingState) -> MarkingState {
    MarkingState { ages: q.ages.iter().map(|a| a.map(|a| a + 1)).collect() }
}

/// Advances time straight to the next saturated marking.
///
/// Among transitions whose inputs are all marked, each needs
/// `max(D(p) - age(p))` more units; the marking ages by the smallest such
/// amount.
pub fn saturate(net: &Spin, q: &MarkingState) -> Result<MarkingState, SemanticsError> {
    if q.ages.len() != net.place_count() {
        return Err(SemanticsError::Malformed);
    }
    if is_saturated(net, q) {
        return Ok(q.clone());
    }
    let k = (0..net.transition_count())
        .filter(|&t| net.inputs(t).iter().all(|&p| q.age(p).is_some()))
        .map(|t| {
            net.inputs(t)
                .iter()
                .map(|&p| net.duration(p).saturating_sub(q.age(p).unwrap()))
                .max()
                .unwrap_or(0)
        })
        .min()
        .ok_or(SemanticsError::Deadlock)?;
    Ok(MarkingState { ages: q.ages.iter().map(|a| a.map(|a| a + k)).collect() })
}

/// Why a transition set fails to be a maximal non-conflicting enabled set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MnceViolation {
    #[error("the set is empty")]
    Empty,
    #[error("transition {0} is not enabled")]
    NotEnabled(TransIdx),
    #[error("transitions {0} and {1} share a place")]
    Conflicting(TransIdx, TransIdx),
    #[error("not maximal: enabled transition {0} could be added")]
    NotMaximal(TransIdx),
}

/// Checks the defining clauses in order: enabledness, absence of conflicts,
/// maximality.
pub fn check_mnce(net: &Spin, q: &MarkingState, set: &[TransIdx]) -> Result<(), MnceViolation> {
    if set.is_empty() {
        return Err(MnceViolation::Empty);
    }
    if let Some(&t) = set.iter().find(|&&t| !is_enabled(net, q, t)) {
        return Err(MnceViolation::NotEnabled(t));
    }
    for (i, &a) in set.iter().enumerate() {
        if let Some(&b) = set[i + 1..].iter().find(|&&b| net.conflict(a, b)) {
            return Err(MnceViolation::Conflicting(a, b));
        }
    }
    let missing = (0..net.transition_count())
        .find(|&t| is_enabled(net, q, t) && !set.contains(&t) && set.iter().all(|&s| !net.conflict(s, t)));
    match missing {
        Some(t) => Err(MnceViolation::NotMaximal(t)),
        None => Ok(()),
    }
}

/// Checks the defining properties of a maximal non-conflicting enabled set.
pub fn is_mnce(net: &Spin, q: &MarkingState, set: &Mnce) -> bool {
    check_mnce(net, q, set.transitions()).is_ok()
}

/// All maximal non-conflicting enabled sets of a saturated marking, in
/// lexicographic order. A final marking has none.
pub fn enumerate_mnce(net: &Spin, q: &MarkingState) -> Result<Vec<Mnce>, SemanticsError> {
    if !is_saturated(net, q) {
        return Err(SemanticsError::NotSaturated);
    }
    let enabled = enabled_transitions(net, q);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    extend_independent(net, &enabled, 0, &mut chosen, &mut out);
    out.sort();
    Ok(out)
}

fn extend_independent(
    net: &Spin,
    enabled: &[TransIdx],
    i: usize,
    chosen: &mut Vec<TransIdx>,
    out: &mut Vec<Mnce>,
) {
    if i == enabled.len() {
        let maximal = enabled.iter().all(|&t| chosen.contains(&t) || chosen.iter().any(|&c| net.conflict(c, t)));
        if maximal && !chosen.is_empty() {
            out.push(Mnce(chosen.clone()));
        }
        return;
    }
    let t = enabled[i];
    if chosen.iter().all(|&c| !net.conflict(c, t)) {
        chosen.push(t);
        extend_independent(net, enabled, i + 1, chosen, out);
        chosen.pop();
        // leaving t out only pays off if something later can block it
        if !enabled[i + 1..].iter().any(|&u| net.conflict(u, t)) {
            return;
        }
    }
    extend_independent(net, enabled, i + 1, chosen, out);
}

/// The probabilistic variants of `tbar`: the maximal sets with the same
/// plain part in which every probabilistic member may be swapped for its
/// partner.
pub fn pvariants(net: &Spin, tbar: &Mnce, q: &MarkingState) -> Result<Vec<Mnce>, SemanticsError> {
    let all = enumerate_mnce(net, q)?;
    if !all.contains(tbar) {
        return Err(SemanticsError::NotMnce);
    }
    Ok(pvariants_among(net, tbar, &all))
}

/// [`pvariants`] over an already enumerated list of maximal sets.
pub fn pvariants_among(net: &Spin, tbar: &Mnce, all: &[Mnce]) -> Vec<Mnce> {
    let plain = tbar.plain_part(net);
    let probs = tbar.prob_part(net);
    let allowed = |t: TransIdx| probs.iter().any(|&p| p == t || net.switch_of(p).ok() == Some(t));
    all.iter()
        .filter(|v| v.plain_part(net) == plain)
        .filter(|v| v.prob_part(net).into_iter().all(allowed))
        .filter(|v| probs.iter().all(|&p| v.contains(p) || net.switch_of(p).is_ok_and(|s| v.contains(s))))
        .cloned()
        .collect()
}

/// Fires a set of transitions at once. Inputs are emptied, outputs receive a
/// fresh token, every other marked place ages by one.
pub fn fire(net: &Spin, q: &MarkingState, set: &[TransIdx]) -> MarkingState {
    let mut ages = q.ages.clone();
    let mut touched = vec![false; ages.len()];
    for &t in set {
        for &p in net.inputs(t) {
            ages[p] = None;
            touched[p] = true;
        }
    }
    for &t in set {
        for &p in net.outputs(t) {
            ages[p] = Some(0);
            touched[p] = true;
        }
    }
    for (p, a) in ages.iter_mut().enumerate() {
        if !touched[p] {
            *a = a.map(|a| a + 1);
        }
    }
    MarkingState { ages }
}

/// Fires `tbar` and saturates the result.
pub fn saturating_step(net: &Spin, q: &MarkingState, tbar: &Mnce) -> Result<MarkingState, SemanticsError> {
    if !is_saturated(net, q) {
        return Err(SemanticsError::NotSaturated);
    }
    if !is_mnce(net, q, tbar) {
        return Err(SemanticsError::NotMnce);
    }
    saturate(net, &fire(net, q, tbar.transitions()))
}

/// The saturated initial marking.
pub fn initial_saturated(net: &Spin) -> Result<MarkingState, SemanticsError> {
    saturate(net, &MarkingState::initial(net))
}

/// No exclusive block has marked places on both of its branches.
pub fn respects_exclusive_branches(net: &Spin, q: &MarkingState) -> bool {
    net.exclusive_branches().iter().all(|[l, r]| {
        !(l.iter().any(|&p| q.age(p).is_some()) && r.iter().any(|&p| q.age(p).is_some()))
    })
}

/// Distinct plain parts of the maximal sets, in order of first appearance.
pub fn plain_parts(net: &Spin, mnces: &[Mnce]) -> Vec<Vec<TransIdx>> {
    let mut out: Vec<Vec<TransIdx>> = Vec::new();
    for m in mnces {
        let plain = m.plain_part(net);
        if !out.contains(&plain) {
            out.push(plain);
        }
    }
    out
}

/// The maximal sets sharing a given plain part, i.e. one probabilistic
/// variant class.
pub fn variants_with_plain(net: &Spin, mnces: &[Mnce], plain: &[TransIdx]) -> Vec<Mnce> {
    mnces.iter().filter(|m| m.plain_part(net) == plain).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::fixtures::fork_net;

    fn names(net: &Spin, sets: &[Mnce]) -> Vec<Vec<String>> {
        sets.iter().map(|m| m.names(net).into_iter().map(String::from).collect()).collect()
    }

    fn fork_state(net: &Spin) -> MarkingState {
        let mut q = MarkingState::empty(net);
        q.set(net.place_index("p1").unwrap(), Some(0));
        q.set(net.place_index("p2").unwrap(), Some(0));
        q
    }

    #[test]
    fn fork_enabled_and_mnce() {
        let net = fork_net();
        let q = fork_state(&net);
        let en: Vec<&str> = enabled_transitions(&net, &q).iter().map(|&t| net.transition_name(t)).collect();
        assert_eq!(en, ["t1", "t2", "t3", "t4"]);
        let all = enumerate_mnce(&net, &q).unwrap();
        assert_eq!(
            names(&net, &all),
            [["t1", "t3"], ["t1", "t4"], ["t2", "t3"], ["t2", "t4"]].map(|v| v.map(String::from).to_vec())
        );
        let t = |n| net.transition_index(n).unwrap();
        assert_eq!(check_mnce(&net, &q, &[t("t1")]), Err(MnceViolation::NotMaximal(t("t3"))));
        assert_eq!(check_mnce(&net, &q, &[t("t1"), t("t4"), t("t5")]), Err(MnceViolation::NotEnabled(t("t5"))));
        assert_eq!(check_mnce(&net, &q, &[t("t1"), t("t2"), t("t4")]), Err(MnceViolation::Conflicting(t("t1"), t("t2"))));
    }

    #[test]
    fn fork_pvariants() {
        let net = fork_net();
        let q = fork_state(&net);
        let t = |n| net.transition_index(n).unwrap();
        let v = pvariants(&net, &Mnce::from_unchecked(vec![t("t1"), t("t3")]), &q).unwrap();
        assert_eq!(names(&net, &v), [vec!["t1", "t3"], vec!["t1", "t4"]]);
    }

    #[test]
    fn fire_marks_outputs() {
        let net = fork_net();
        let q = fork_state(&net);
        let t = |n| net.transition_index(n).unwrap();
        let next = saturating_step(&net, &q, &Mnce::from_unchecked(vec![t("t1"), t("t3")])).unwrap();
        assert_eq!(next.render(&net), "p3:0 p4:0");
    }

    #[test]
    fn saturate_jumps_by_the_minimum() {
        let mut b = crate::spin::SpinBuilder::new(1);
        for (p, d) in [("p0", 0), ("a", 3), ("b", 7), ("a2", 0), ("b2", 0), ("pf", 0)] {
            b.place(p, d).unwrap();
        }
        for t in ["fork", "ta", "tb", "join"] {
            b.transition(t).unwrap();
        }
        for (u, v) in [
            ("p0", "fork"),
            ("fork", "a"),
            ("fork", "b"),
            ("a", "ta"),
            ("b", "tb"),
            ("ta", "a2"),
            ("tb", "b2"),
            ("a2", "join"),
            ("b2", "join"),
            ("join", "pf"),
        ] {
            b.arc(u, v).unwrap();
        }
        let net = b.build().unwrap();
        let q0 = initial_saturated(&net).unwrap();
        let fork = Mnce::from_unchecked(vec![net.transition_index("fork").unwrap()]);
        let q1 = saturating_step(&net, &q0, &fork).unwrap();
        assert_eq!(q1.render(&net), "a:3 b:3");
        let mut oracle = fire(&net, &q0, fork.transitions());
        while enabled_transitions(&net, &oracle).is_empty() {
            oracle = wait_step(&oracle);
        }
        assert_eq!(q1, oracle);
        assert_eq!(saturate(&net, &q1).unwrap(), q1);
    }

    #[test]
    fn unsaturated_enumeration_fails() {
        let net = fork_net();
        let q = MarkingState::empty(&net);
        assert_eq!(enumerate_mnce(&net, &q), Err(SemanticsError::NotSaturated));
        assert_eq!(saturate(&net, &q), Err(SemanticsError::Deadlock));
    }
}
