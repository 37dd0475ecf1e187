//! Timed nets with probabilistic transition pairs and impact vectors.
//!
//! Places and transitions are addressed by dense indices; index order is the
//! lexicographic order of their names, so every set of indices sorts the same
//! way as the corresponding names.

mod dot;
mod translate;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{Impact, Rational};

pub use dot::spin_to_dot;
pub use translate::{translate_to_spin, ProvenanceMap};
pub use validate::{validate_structured_acyclic, SpinClause, SpinReport, SpinViolation};

pub type PlaceIdx = usize;
pub type TransIdx = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpinError {
    #[error("duplicate element `{0}`")]
    Duplicate(String),
    #[error("unknown element `{0}`")]
    Unknown(String),
    #[error("arc ({0}, {1}) must join a place and a transition")]
    BadArc(String, String),
    #[error("net needs a unique initial place and a unique final place")]
    Endpoints,
    #[error("transition `{0}` is not probabilistic")]
    NotProbabilistic(String),
    #[error("`{0}` is paired more than once")]
    DoublePairing(String),
    #[error("transition `{0}` has impact dimension {1}, expected {2}")]
    Dimension(String, usize, usize),
    #[error("process diagram is not acyclic; unravel loops first")]
    Cyclic,
    #[error("process diagram is not block structured: {0}")]
    Unstructured(String),
}

/// Either kind of net element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Place(PlaceIdx),
    Transition(TransIdx),
}

/// A fragment of the net recorded by the translation: one task, one block
/// or one branch of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetRegion {
    pub label: String,
    pub entry: Element,
    pub exit: Element,
    pub members: BTreeSet<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spin {
    places: Vec<String>,
    durations: Vec<u64>,
    transitions: Vec<String>,
    impacts: Vec<Impact>,
    probs: Vec<Option<Rational>>,
    switch: Vec<Option<TransIdx>>,
    inputs: Vec<Vec<PlaceIdx>>,
    outputs: Vec<Vec<PlaceIdx>>,
    producers: Vec<Vec<TransIdx>>,
    consumers: Vec<Vec<TransIdx>>,
    p0: PlaceIdx,
    pf: PlaceIdx,
    impact_dim: usize,
    regions: Vec<NetRegion>,
    exclusive: Vec<[BTreeSet<PlaceIdx>; 2]>,
}

impl Spin {
    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_name(&self, p: PlaceIdx) -> &str {
        &self.places[p]
    }

    pub fn transition_name(&self, t: TransIdx) -> &str {
        &self.transitions[t]
    }

    pub fn place_index(&self, name: &str) -> Option<PlaceIdx> {
        self.places.binary_search_by(|p| p.as_str().cmp(name)).ok()
    }

    pub fn transition_index(&self, name: &str) -> Option<TransIdx> {
        self.transitions.binary_search_by(|t| t.as_str().cmp(name)).ok()
    }

    pub fn duration(&self, p: PlaceIdx) -> u64 {
        self.durations[p]
    }

    pub fn impact(&self, t: TransIdx) -> &Impact {
        &self.impacts[t]
    }

    pub fn impact_dim(&self) -> usize {
        self.impact_dim
    }

    /// `Pr(t)` for probabilistic transitions, `None` otherwise.
    pub fn prob(&self, t: TransIdx) -> Option<&Rational> {
        self.probs[t].as_ref()
    }

    pub fn is_probabilistic(&self, t: TransIdx) -> bool {
        self.probs[t].is_some()
    }

    pub fn inputs(&self, t: TransIdx) -> &[PlaceIdx] {
        &self.inputs[t]
    }

    pub fn outputs(&self, t: TransIdx) -> &[PlaceIdx] {
        &self.outputs[t]
    }

    /// Transitions with an arc into `p`.
    pub fn producers(&self, p: PlaceIdx) -> &[TransIdx] {
        &self.producers[p]
    }

    /// Transitions with an arc out of `p`.
    pub fn consumers(&self, p: PlaceIdx) -> &[TransIdx] {
        &self.consumers[p]
    }

    pub fn p0(&self) -> PlaceIdx {
        self.p0
    }

    pub fn pf(&self) -> PlaceIdx {
        self.pf
    }

    /// The other transition of a probabilistic pair.
    pub fn switch_of(&self, t: TransIdx) -> Result<TransIdx, SpinError> {
        self.switch
            .get(t)
            .copied()
            .flatten()
            .ok_or_else(|| SpinError::NotProbabilistic(self.transitions.get(t).cloned().unwrap_or_default()))
    }

    /// Like [`Spin::switch_of`] but by name.
    pub fn switch_by_name(&self, t: &str) -> Result<&str, SpinError> {
        let idx = self.transition_index(t).ok_or_else(|| SpinError::Unknown(t.to_string()))?;
        Ok(self.transition_name(self.switch_of(idx)?))
    }

    pub fn probabilistic_transitions(&self) -> impl Iterator<Item = TransIdx> + '_ {
        (0..self.transitions.len()).filter(|&t| self.is_probabilistic(t))
    }

    /// Places and transitions touched by `t`.
    pub fn places_of(&self, t: TransIdx) -> impl Iterator<Item = PlaceIdx> + '_ {
        self.inputs[t].iter().chain(&self.outputs[t]).copied()
    }

    /// Two transitions conflict when their place sets intersect.
    pub fn conflict(&self, a: TransIdx, b: TransIdx) -> bool {
        self.places_of(a).any(|p| self.places_of(b).any(|q| p == q))
    }

    /// All arcs as `(from, to)` names.
    pub fn arcs(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for t in 0..self.transitions.len() {
            for &p in &self.inputs[t] {
                out.push((self.places[p].as_str(), self.transitions[t].as_str()));
            }
            for &p in &self.outputs[t] {
                out.push((self.transitions[t].as_str(), self.places[p].as_str()));
            }
        }
        out.sort();
        out
    }

    pub fn regions(&self) -> &[NetRegion] {
        &self.regions
    }

    /// Place sets of the two branches of each exclusive block; a reachable
    /// marking never marks places on both sides.
    pub fn exclusive_branches(&self) -> &[[BTreeSet<PlaceIdx>; 2]] {
        &self.exclusive
    }

    fn element_name(&self, e: Element) -> &str {
        match e {
            Element::Place(p) => &self.places[p],
            Element::Transition(t) => &self.transitions[t],
        }
    }

    fn successors(&self, e: Element) -> Vec<Element> {
        match e {
            Element::Place(p) => self.consumers[p].iter().map(|&t| Element::Transition(t)).collect(),
            Element::Transition(t) => self.outputs[t].iter().map(|&p| Element::Place(p)).collect(),
        }
    }

    fn predecessors(&self, e: Element) -> Vec<Element> {
        match e {
            Element::Place(p) => self.producers[p].iter().map(|&t| Element::Transition(t)).collect(),
            Element::Transition(t) => self.inputs[t].iter().map(|&p| Element::Place(p)).collect(),
        }
    }
}

/// Name-based construction of a [`Spin`]. Structural rules are not enforced
/// here, only referential integrity; use [`validate_structured_acyclic`].
#[derive(Debug, Clone, Default)]
pub struct SpinBuilder {
    impact_dim: usize,
    places: BTreeMap<String, u64>,
    transitions: BTreeMap<String, (Impact, Option<Rational>)>,
    arcs: BTreeSet<(String, String)>,
    pairs: Vec<(String, String)>,
    regions: Vec<(String, String, String, BTreeSet<String>)>,
    exclusive: Vec<[BTreeSet<String>; 2]>,
}

impl SpinBuilder {
    pub fn new(impact_dim: usize) -> Self {
        SpinBuilder { impact_dim, ..Default::default() }
    }

    fn fresh(&self, id: &str) -> Result<(), SpinError> {
        if self.places.contains_key(id) || self.transitions.contains_key(id) {
            Err(SpinError::Duplicate(id.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn place(&mut self, id: impl Into<String>, duration: u64) -> Result<&mut Self, SpinError> {
        let id = id.into();
        self.fresh(&id)?;
        self.places.insert(id, duration);
        Ok(self)
    }

    /// A transition with the zero impact.
    pub fn transition(&mut self, id: impl Into<String>) -> Result<&mut Self, SpinError> {
        let dim = self.impact_dim;
        self.transition_with(id, Impact::zero(dim), None)
    }

    pub fn transition_with(
        &mut self,
        id: impl Into<String>,
        impact: Impact,
        prob: Option<Rational>,
    ) -> Result<&mut Self, SpinError> {
        let id = id.into();
        self.fresh(&id)?;
        if impact.dim() != self.impact_dim {
            return Err(SpinError::Dimension(id, impact.dim(), self.impact_dim));
        }
        self.transitions.insert(id, (impact, prob));
        Ok(self)
    }

    /// An arc between a place and a transition, in either direction.
    pub fn arc(&mut self, from: &str, to: &str) -> Result<&mut Self, SpinError> {
        let ok = (self.places.contains_key(from) && self.transitions.contains_key(to))
            || (self.transitions.contains_key(from) && self.places.contains_key(to));
        if !ok {
            for id in [from, to] {
                if !self.places.contains_key(id) && !self.transitions.contains_key(id) {
                    return Err(SpinError::Unknown(id.to_string()));
                }
            }
            return Err(SpinError::BadArc(from.to_string(), to.to_string()));
        }
        self.arcs.insert((from.to_string(), to.to_string()));
        Ok(self)
    }

    /// Declares `a` and `b` as a probabilistic pair.
    pub fn pair(&mut self, a: &str, b: &str) -> Result<&mut Self, SpinError> {
        for id in [a, b] {
            match self.transitions.get(id) {
                None => return Err(SpinError::Unknown(id.to_string())),
                Some((_, None)) => return Err(SpinError::NotProbabilistic(id.to_string())),
                Some(_) => {}
            }
            if self.pairs.iter().any(|(x, y)| x == id || y == id) {
                return Err(SpinError::DoublePairing(id.to_string()));
            }
        }
        self.pairs.push((a.to_string(), b.to_string()));
        Ok(self)
    }

    pub fn region(&mut self, label: impl Into<String>, entry: &str, exit: &str, members: BTreeSet<String>) -> &mut Self {
        self.regions.push((label.into(), entry.to_string(), exit.to_string(), members));
        self
    }

    pub fn exclusive_branches(&mut self, left: BTreeSet<String>, right: BTreeSet<String>) -> &mut Self {
        self.exclusive.push([left, right]);
        self
    }

    pub fn build(&self) -> Result<Spin, SpinError> {
        let places: Vec<String> = self.places.keys().cloned().collect();
        let transitions: Vec<String> = self.transitions.keys().cloned().collect();
        let pidx = |id: &str| places.binary_search_by(|p| p.as_str().cmp(id)).ok();
        let tidx = |id: &str| transitions.binary_search_by(|t| t.as_str().cmp(id)).ok();
        let elem = |id: &str| -> Result<Element, SpinError> {
            pidx(id)
                .map(Element::Place)
                .or_else(|| tidx(id).map(Element::Transition))
                .ok_or_else(|| SpinError::Unknown(id.to_string()))
        };

        let (np, nt) = (places.len(), transitions.len());
        let mut inputs = vec![Vec::new(); nt];
        let mut outputs = vec![Vec::new(); nt];
        let mut producers = vec![Vec::new(); np];
        let mut consumers = vec![Vec::new(); np];
        for (from, to) in &self.arcs {
            match (elem(from)?, elem(to)?) {
                (Element::Place(p), Element::Transition(t)) => {
                    inputs[t].push(p);
                    consumers[p].push(t);
                }
                (Element::Transition(t), Element::Place(p)) => {
                    outputs[t].push(p);
                    producers[p].push(t);
                }
                _ => return Err(SpinError::BadArc(from.clone(), to.clone())),
            }
        }
        for v in inputs.iter_mut().chain(&mut outputs).chain(&mut producers).chain(&mut consumers) {
            v.sort_unstable();
        }

        let sources: Vec<PlaceIdx> = (0..np).filter(|&p| producers[p].is_empty()).collect();
        let sinks: Vec<PlaceIdx> = (0..np).filter(|&p| consumers[p].is_empty()).collect();
        let (&[p0], &[pf]) = (sources.as_slice(), sinks.as_slice()) else {
            return Err(SpinError::Endpoints);
        };

        let mut switch = vec![None; nt];
        for (a, b) in &self.pairs {
            let (a, b) = (tidx(a).unwrap(), tidx(b).unwrap());
            switch[a] = Some(b);
            switch[b] = Some(a);
        }

        let regions = self
            .regions
            .iter()
            .map(|(label, entry, exit, members)| {
                Ok(NetRegion {
                    label: label.clone(),
                    entry: elem(entry)?,
                    exit: elem(exit)?,
                    members: members.iter().map(|m| elem(m)).collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, SpinError>>()?;
        let exclusive = self
            .exclusive
            .iter()
            .map(|sides| {
                let side = |s: &BTreeSet<String>| {
                    s.iter().map(|id| pidx(id).ok_or_else(|| SpinError::Unknown(id.clone()))).collect::<Result<BTreeSet<PlaceIdx>, SpinError>>()
                };
                Ok([side(&sides[0])?, side(&sides[1])?])
            })
            .collect::<Result<Vec<_>, SpinError>>()?;

        Ok(Spin {
            durations: self.places.values().copied().collect(),
            impacts: self.transitions.values().map(|(i, _)| i.clone()).collect(),
            probs: self.transitions.values().map(|(_, p)| p.clone()).collect(),
            places,
            transitions,
            switch,
            inputs,
            outputs,
            producers,
            consumers,
            p0,
            pf,
            impact_dim: self.impact_dim,
            regions,
            exclusive,
        })
    }
}

impl Spin {
    /// True if `t` carries the zero impact.
    pub fn is_silent(&self, t: TransIdx) -> bool {
        self.impacts[t].components().iter().all(Zero::is_zero)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_follow_names() {
        let net = fixtures::fork_net();
        assert_eq!(net.place_name(net.p0()), "p0");
        assert_eq!(net.place_name(net.pf()), "pf");
        let t3 = net.transition_index("t3").unwrap();
        assert_eq!(net.switch_by_name("t3").unwrap(), "t4");
        assert_eq!(net.switch_of(net.switch_of(t3).unwrap()).unwrap(), t3);
        assert!(net.switch_of(net.transition_index("t1").unwrap()).is_err());
    }

    #[test]
    fn conflicts_share_places() {
        let net = fixtures::fork_net();
        let t = |n| net.transition_index(n).unwrap();
        assert!(net.conflict(t("t1"), t("t2")));
        assert!(!net.conflict(t("t1"), t("t3")));
        assert!(net.conflict(t("t0"), t("t1")));
    }

    #[test]
    fn builder_rejects_bad_arcs() {
        let mut b = SpinBuilder::new(1);
        b.place("a", 0).unwrap().place("b", 0).unwrap();
        assert!(matches!(b.arc("a", "b"), Err(SpinError::BadArc(..))));
        assert!(matches!(b.place("a", 1), Err(SpinError::Duplicate(_))));
    }
}
