//! Exhaustive enumeration of controller assignments.

use num_traits::{One, Zero};

use super::OracleError;
use crate::game::{GameBoard, NodeIdx, Player};
use crate::rational::{Impact, Rational};
use crate::semantics::{enumerate_mnce, initial_saturated, pvariants_among, saturating_step, MarkingState};
use crate::spin::Spin;

pub const DEFAULT_ASSIGNMENT_CAP: usize = 1 << 20;

/// Totals of one complete controller assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentOutcome {
    pub id: usize,
    pub expected_impact: Impact,
    /// Summed probability of the plays the assignment allows.
    pub total_probability: Rational,
    pub plays: usize,
}

/// Partial totals below some position.
#[derive(Clone)]
struct Partial {
    impact: Impact,
    prob: Rational,
    plays: usize,
}

/// Every way of picking one partial from each list, summed.
fn product(lists: Vec<Vec<Partial>>, dim: usize, cap: usize) -> Result<Vec<Partial>, OracleError> {
    let mut acc = vec![Partial { impact: Impact::zero(dim), prob: Rational::zero(), plays: 0 }];
    for list in lists {
        if acc.len().saturating_mul(list.len()) > cap {
            return Err(OracleError::TooManyAssignments(cap));
        }
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for a in &acc {
            for b in &list {
                next.push(Partial { impact: &a.impact + &b.impact, prob: &a.prob + &b.prob, plays: a.plays + b.plays });
            }
        }
        acc = next;
    }
    Ok(acc)
}

fn number(parts: Vec<Partial>) -> Vec<AssignmentOutcome> {
    parts
        .into_iter()
        .enumerate()
        .map(|(id, p)| AssignmentOutcome { id, expected_impact: p.impact, total_probability: p.prob, plays: p.plays })
        .collect()
}

fn net_assignments(
    net: &Spin,
    q: &MarkingState,
    im: &Impact,
    cp: &Rational,
    depth: usize,
    cap: usize,
) -> Result<Vec<Partial>, OracleError> {
    if depth > net.transition_count() {
        return Err(OracleError::DepthExceeded(net.transition_count()));
    }
    if q.is_final(net) {
        return Ok(vec![Partial { impact: im.scale(cp), prob: cp.clone(), plays: 1 }]);
    }
    let all = enumerate_mnce(net, q)?;
    let mut plains: Vec<Vec<usize>> = all.iter().map(|m| m.plain_part(net)).collect();
    plains.sort();
    plains.dedup();
    let mut out = Vec::new();
    for plain in plains {
        let rep = all.iter().find(|m| m.plain_part(net) == plain).unwrap();
        let mut lists = Vec::new();
        for v in pvariants_among(net, rep, &all) {
            let mut impact = im.clone();
            let mut prob = cp.clone();
            for &t in v.transitions() {
                impact += net.impact(t);
                if let Some(p) = net.prob(t) {
                    prob *= p;
                }
            }
            let next = saturating_step(net, q, &v)?;
            lists.push(net_assignments(net, &next, &impact, &prob, depth + 1, cap)?);
        }
        out.extend(product(lists, im.dim(), cap)?);
        if out.len() > cap {
            return Err(OracleError::TooManyAssignments(cap));
        }
    }
    Ok(out)
}

/// Expected impact of every controller assignment of the net, where an
/// assignment fixes a choice at each reachable controller position.
pub fn brute_force_expected_impacts(net: &Spin, cap: usize) -> Result<Vec<AssignmentOutcome>, OracleError> {
    let q0 = initial_saturated(net)?;
    let parts = net_assignments(net, &q0, &Impact::zero(net.impact_dim()), &Rational::one(), 0, cap)?;
    Ok(number(parts))
}

fn board_assignments(board: &GameBoard, n: NodeIdx, costs: &[Impact], cap: usize) -> Result<Vec<Partial>, OracleError> {
    let node = board.node(n);
    if let Ok(i) = board.finals().binary_search(&n) {
        return Ok(vec![Partial { impact: costs[i].clone(), prob: board.path_probability(n), plays: 1 }]);
    }
    let mut lists = Vec::with_capacity(node.children.len());
    for &c in &node.children {
        lists.push(board_assignments(board, c, costs, cap)?);
    }
    match node.player {
        Player::Circle => {
            let out: Vec<Partial> = lists.into_iter().flatten().collect();
            if out.len() > cap {
                return Err(OracleError::TooManyAssignments(cap));
            }
            Ok(out)
        }
        Player::Square => product(lists, board.impact_dim(), cap),
    }
}

/// Summed final costs of every positional strategy of a board. A non-final
/// node without moves admits no strategy.
pub fn brute_force_board(board: &GameBoard, cap: usize) -> Result<Vec<AssignmentOutcome>, OracleError> {
    let costs = board.final_costs();
    Ok(number(board_assignments(board, board.start(), &costs, cap)?))
}
