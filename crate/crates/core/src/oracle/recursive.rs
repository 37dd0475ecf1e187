//! Recursive decision procedure: backtracking over controller moves while a
//! residual budget is threaded through the nature outcomes.

use std::cell::RefCell;

use num_traits::{One, Signed};

use super::OracleError;
use crate::rational::{Impact, Rational};
use crate::semantics::{enumerate_mnce, initial_saturated, pvariants_among, saturating_step, MarkingState};
use crate::spin::Spin;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecursiveVerdict {
    pub exists: bool,
    /// Budget left over by the first winning strategy found.
    pub residual: Option<Impact>,
}

/// One outcome of a controller move: the successor marking with the impact
/// and probability of the transitions fired to get there.
struct Outcome {
    state: MarkingState,
    impact: Impact,
    prob: Rational,
}

type Cont<'a> = &'a dyn Fn(Impact) -> Result<bool, OracleError>;

struct Search<'n> {
    net: &'n Spin,
}

impl Search<'_> {
    /// Tries every controller move at `q`; `k` receives the residual after
    /// this subtree and decides whether the rest of the search succeeds.
    fn explore(&self, q: &MarkingState, im: &Impact, cp: &Rational, rei: Impact, depth: usize, k: Cont<'_>) -> Result<bool, OracleError> {
        if depth > self.net.transition_count() {
            return Err(OracleError::DepthExceeded(self.net.transition_count()));
        }
        if q.is_final(self.net) {
            let left = &rei - &im.scale(cp);
            if left.components().iter().any(Signed::is_negative) {
                return Ok(false);
            }
            return k(left);
        }
        let all = enumerate_mnce(self.net, q)?;
        let mut plains: Vec<Vec<usize>> = all.iter().map(|m| m.plain_part(self.net)).collect();
        plains.sort();
        plains.dedup();
        for plain in plains {
            let rep = all.iter().find(|m| m.plain_part(self.net) == plain).unwrap();
            let outcomes = pvariants_among(self.net, rep, &all)
                .into_iter()
                .map(|v| {
                    let mut impact = im.clone();
                    let mut prob = cp.clone();
                    for &t in v.transitions() {
                        impact += self.net.impact(t);
                        if let Some(p) = self.net.prob(t) {
                            prob *= p;
                        }
                    }
                    Ok(Outcome { state: saturating_step(self.net, q, &v)?, impact, prob })
                })
                .collect::<Result<Vec<_>, OracleError>>()?;
            if self.thread(&outcomes, 0, rei.clone(), depth, k)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Runs the outcomes of one move in sequence, each starting from the
    /// residual its predecessor left.
    fn thread(&self, outcomes: &[Outcome], i: usize, rei: Impact, depth: usize, k: Cont<'_>) -> Result<bool, OracleError> {
        let Some(o) = outcomes.get(i) else { return k(rei) };
        if rei.components().iter().any(Signed::is_negative) {
            return Ok(false);
        }
        self.explore(&o.state, &o.impact, &o.prob, rei, depth + 1, &|r| self.thread(outcomes, i + 1, r, depth, k))
    }
}

/// Decides whether some strategy keeps the expected impact within `bound`.
pub fn decide_strategy_exists(net: &Spin, bound: &Impact) -> Result<RecursiveVerdict, OracleError> {
    if bound.dim() != net.impact_dim() {
        return Err(OracleError::DimensionMismatch { expected: net.impact_dim(), found: bound.dim() });
    }
    let q0 = initial_saturated(net)?;
    let found = RefCell::new(None);
    let search = Search { net };
    let exists = search.explore(&q0, &Impact::zero(net.impact_dim()), &Rational::one(), bound.clone(), 0, &|r| {
        *found.borrow_mut() = Some(r);
        Ok(true)
    })?;
    Ok(RecursiveVerdict { exists, residual: found.into_inner() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_process;
    use crate::rational::ratio;
    use crate::spin::translate_to_spin;

    fn net(text: &str) -> Spin {
        translate_to_spin(&parse_process(text).unwrap()).unwrap().0
    }

    #[test]
    fn single_task_boundary() {
        let n = net("T[10, 1]{1}");
        let v = decide_strategy_exists(&n, &Impact::from_ints(&[10, 1])).unwrap();
        assert_eq!(v, RecursiveVerdict { exists: true, residual: Some(Impact::from_ints(&[0, 0])) });
        let v = decide_strategy_exists(&n, &Impact::from_ints(&[9, 1])).unwrap();
        assert_eq!(v, RecursiveVerdict { exists: false, residual: None });
    }

    #[test]
    fn backtracks_into_earlier_subtrees() {
        // the first nature outcome has two ways to win on its own; only the
        // second leaves enough budget for the other outcome
        let n = net("((A[2, 0]{1} / [C] B[0, 2]{1}) ^ [N: 1/2] D[1, 0]{1})");
        let v = decide_strategy_exists(&n, &Impact::from_ints(&[1, 1])).unwrap();
        assert!(v.exists);
        assert_eq!(v.residual, Some(Impact::new(vec![ratio(1, 2), ratio(0, 1)])));
    }
}
