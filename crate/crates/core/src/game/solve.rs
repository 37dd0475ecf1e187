//! Attractor computation over admissible final subsets, plus strategy extraction.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use super::board::{GameBoard, NodeIdx, Player};
use crate::rational::Impact;

/// Attractor membership with the iteration at which each node entered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttractorResult {
    pub rank: Vec<Option<usize>>,
}

impl AttractorResult {
    pub fn contains(&self, n: NodeIdx) -> bool {
        self.rank[n].is_some()
    }

    pub fn members(&self) -> Vec<NodeIdx> {
        (0..self.rank.len()).filter(|&n| self.rank[n].is_some()).collect()
    }
}

/// Least fixpoint from `target`: a circle node joins once some successor is
/// in, a square node once all successors are in. Nodes without successors
/// join only through `target`.
///
/// Children always have larger indices than their parents, so one sweep from
/// the leaves computes the same ranks as iterating the fixpoint.
pub fn attractor(board: &GameBoard, target: &[NodeIdx]) -> AttractorResult {
    let mut rank: Vec<Option<usize>> = vec![None; board.len()];
    for &t in target {
        rank[t] = Some(0);
    }
    for i in (0..board.len()).rev() {
        let node = board.node(i);
        if node.children.is_empty() || rank[i].is_some() {
            continue;
        }
        let child_ranks = node.children.iter().map(|&c| rank[c]);
        rank[i] = match node.player {
            Player::Circle => child_ranks.flatten().min().map(|r| r + 1),
            Player::Square => child_ranks.collect::<Option<Vec<_>>>().and_then(|v| v.into_iter().max()).map(|r| r + 1),
        };
    }
    AttractorResult { rank }
}

/// A positional strategy: one square successor per reached circle node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyTree {
    pub choices: BTreeMap<NodeIdx, NodeIdx>,
    pub expected_impact: Impact,
    pub reached_finals: Vec<NodeIdx>,
    /// The final subset whose attractor produced the strategy.
    pub target: Vec<NodeIdx>,
}

/// Follows minimal-rank moves from the start; among equal ranks the first
/// child (lexicographically least part) wins.
pub fn extract_strategy(board: &GameBoard, attr: &AttractorResult, costs: &[Impact]) -> Option<StrategyTree> {
    let start = board.start();
    attr.rank[start]?;
    let mut choices = BTreeMap::new();
    let mut reached = Vec::new();
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        let node = board.node(n);
        if node.children.is_empty() {
            reached.push(n);
            continue;
        }
        match node.player {
            Player::Circle => {
                let best = node
                    .children
                    .iter()
                    .copied()
                    .filter(|&c| attr.rank[c].is_some())
                    .min_by_key(|&c| attr.rank[c].unwrap())?;
                choices.insert(n, best);
                stack.push(best);
            }
            Player::Square => stack.extend(node.children.iter().copied()),
        }
    }
    reached.sort_unstable();
    let finals = board.finals();
    let mut expected = Impact::zero(board.impact_dim());
    for f in &reached {
        let pos = finals.binary_search(f).ok()?;
        expected += &costs[pos];
    }
    Some(StrategyTree { choices, expected_impact: expected, reached_finals: reached, target: Vec::new() })
}

/// Every play consistent with the strategy ends in a final, and every
/// reached nature node has all of its successors covered.
pub fn is_closed(board: &GameBoard, strategy: &StrategyTree) -> bool {
    let mut stack = vec![board.start()];
    let mut reached = Vec::new();
    while let Some(n) = stack.pop() {
        let node = board.node(n);
        if node.children.is_empty() {
            if !board.is_final(n) {
                return false;
            }
            reached.push(n);
            continue;
        }
        match node.player {
            Player::Circle => match strategy.choices.get(&n) {
                Some(&c) if node.children.contains(&c) => stack.push(c),
                _ => return false,
            },
            Player::Square => stack.extend(node.children.iter().copied()),
        }
    }
    reached.sort_unstable();
    reached == strategy.reached_finals
}

/// Cost vectors in a form the subset search can add and compare.
trait CostSpace {
    type V: Clone;
    fn zero(&self) -> Self::V;
    fn add(&self, acc: &Self::V, item: usize) -> Self::V;
    fn within(&self, v: &Self::V) -> bool;
}

struct ExactCosts<'a> {
    costs: Vec<&'a Impact>,
    bound: &'a Impact,
}

impl CostSpace for ExactCosts<'_> {
    type V = Impact;
    fn zero(&self) -> Impact {
        Impact::zero(self.bound.dim())
    }
    fn add(&self, acc: &Impact, item: usize) -> Impact {
        acc + self.costs[item]
    }
    fn within(&self, v: &Impact) -> bool {
        v.le(self.bound)
    }
}

/// Costs scaled per component to a common denominator.
struct ScaledCosts {
    costs: Vec<Vec<i128>>,
    bound: Vec<i128>,
}

impl ScaledCosts {
    /// `None` when the scaled values might overflow.
    fn try_new(costs: &[&Impact], bound: &Impact) -> Option<Self> {
        let dim = bound.dim();
        let limit = BigInt::from(1u128 << 100) / BigInt::from(costs.len().max(1));
        let mut scaled: Vec<Vec<i128>> = vec![Vec::with_capacity(dim); costs.len()];
        let mut scaled_bound = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut lcm = BigInt::one();
            for c in costs.iter().map(|c| &c.components()[j]).chain([&bound.components()[j]]) {
                lcm = lcm.lcm(c.denom());
            }
            let scale = |q: &crate::rational::Rational| -> Option<i128> {
                let v: BigInt = q.numer() * (&lcm / q.denom());
                if v > limit {
                    return None;
                }
                v.to_i128()
            };
            for (i, c) in costs.iter().enumerate() {
                scaled[i].push(scale(&c.components()[j])?);
            }
            // every subset sum stays below 2^100, so larger bounds can be clamped
            let b: BigInt = bound.components()[j].numer() * (&lcm / bound.components()[j].denom());
            scaled_bound.push(b.min(BigInt::from(1u128 << 100)).to_i128()?);
        }
        Some(ScaledCosts { costs: scaled, bound: scaled_bound })
    }
}

impl CostSpace for ScaledCosts {
    type V = Vec<i128>;
    fn zero(&self) -> Vec<i128> {
        vec![0; self.bound.len()]
    }
    fn add(&self, acc: &Vec<i128>, item: usize) -> Vec<i128> {
        acc.iter().zip(&self.costs[item]).map(|(a, b)| a + b).collect()
    }
    fn within(&self, v: &Vec<i128>) -> bool {
        v.iter().zip(&self.bound).all(|(a, b)| a <= b)
    }
}

/// Enumerates the maximal subsets of `0..n` whose cost sum stays within the
/// bound: by decreasing size, lexicographically within a size.
fn maximal_subsets<S: CostSpace>(
    space: &S,
    n: usize,
    visit: &mut dyn FnMut(&[usize]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let fits: Vec<usize> = (0..n).filter(|&i| space.within(&space.add(&space.zero(), i))).collect();
    if fits.is_empty() {
        return visit(&[]);
    }
    for size in (1..=fits.len()).rev() {
        let mut chosen = Vec::with_capacity(size);
        level(space, &fits, size, 0, &space.zero(), &mut chosen, visit)?;
    }
    ControlFlow::Continue(())
}

fn level<S: CostSpace>(
    space: &S,
    items: &[usize],
    size: usize,
    from: usize,
    partial: &S::V,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if chosen.len() == size {
        let maximal = items.iter().all(|i| chosen.contains(i) || !space.within(&space.add(partial, *i)));
        return if maximal { visit(chosen) } else { ControlFlow::Continue(()) };
    }
    let needed = size - chosen.len();
    for k in from..=items.len().saturating_sub(needed) {
        let next = space.add(partial, items[k]);
        if !space.within(&next) {
            continue;
        }
        chosen.push(items[k]);
        let flow = level(space, items, size, k + 1, &next, chosen, visit);
        chosen.pop();
        flow?;
    }
    ControlFlow::Continue(())
}

/// Streams the maximal admissible subsets of `candidates` (indices into
/// `costs`) to `visit`, which may stop the search early.
pub fn for_each_admissible_subset(
    costs: &[Impact],
    candidates: &[usize],
    bound: &Impact,
    visit: &mut dyn FnMut(&[usize]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let selected: Vec<&Impact> = candidates.iter().map(|&i| &costs[i]).collect();
    let mut remap = |local: &[usize]| {
        let global: Vec<usize> = local.iter().map(|&i| candidates[i]).collect();
        visit(&global)
    };
    match ScaledCosts::try_new(&selected, bound) {
        Some(space) => maximal_subsets(&space, selected.len(), &mut remap),
        None => maximal_subsets(&ExactCosts { costs: selected.clone(), bound }, selected.len(), &mut remap),
    }
}

/// All maximal subsets of the finals whose summed cost is within `bound`, as
/// node indices, in search order.
pub fn admissible_final_subsets(board: &GameBoard, bound: &Impact) -> Vec<Vec<NodeIdx>> {
    let costs = board.final_costs();
    let all: Vec<usize> = (0..costs.len()).collect();
    let mut out = Vec::new();
    let _ = for_each_admissible_subset(&costs, &all, bound, &mut |s| {
        out.push(s.iter().map(|&i| board.finals()[i]).collect());
        ControlFlow::Continue(())
    });
    out
}

/// Search statistics of one solve.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub subsets_tried: usize,
    pub finals_considered: usize,
}

/// Decides a board against a bound, returning a strategy when one exists.
///
/// Finals whose own cost breaks the bound are dropped, and so are finals
/// below a nature node that can no longer be won; the remaining maximal
/// admissible subsets are tried in order until one attracts the start.
pub fn solve_board(board: &GameBoard, bound: &Impact) -> (Option<StrategyTree>, SolveStats) {
    let costs = board.final_costs();
    let finals = board.finals();
    let fitting: Vec<NodeIdx> =
        finals.iter().zip(&costs).filter(|(_, c)| c.le(bound)).map(|(&f, _)| f).collect();
    let alive = attractor(board, &fitting);
    let mut stats = SolveStats::default();
    if !alive.contains(board.start()) {
        return (None, stats);
    }
    let candidates: Vec<usize> = (0..finals.len())
        .filter(|&i| alive.contains(finals[i]))
        .filter(|&i| board.path_to(finals[i]).iter().all(|&n| alive.contains(n)))
        .collect();
    stats.finals_considered = candidates.len();

    let mut found = None;
    let _ = for_each_admissible_subset(&costs, &candidates, bound, &mut |subset| {
        stats.subsets_tried += 1;
        let target: Vec<NodeIdx> = subset.iter().map(|&i| finals[i]).collect();
        let attr = attractor(board, &target);
        match extract_strategy(board, &attr, &costs) {
            Some(mut strategy) => {
                strategy.target = target;
                found = Some(strategy);
                ControlFlow::Break(())
            }
            None => ControlFlow::Continue(()),
        }
    });
    (found, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, Rational};

    fn flat_board(costs: &[i64]) -> GameBoard {
        // a square start whose children are all finals
        let mut b = GameBoard::new(Player::Square, 1, "s");
        for &c in costs {
            let f = b.add_child(0, Player::Circle, "f", Rational::one(), Impact::from_ints(&[c]));
            b.mark_final(f);
        }
        b
    }

    #[test]
    fn maximal_subsets_only() {
        let b = flat_board(&[3, 4]);
        let subsets = admissible_final_subsets(&b, &Impact::from_ints(&[5]));
        assert_eq!(subsets, vec![vec![1], vec![2]]);
        let subsets = admissible_final_subsets(&flat_board(&[0, 0]), &Impact::from_ints(&[0]));
        assert_eq!(subsets, vec![vec![1, 2]]);
    }

    #[test]
    fn square_needs_all_children() {
        let b = flat_board(&[1, 2]);
        let attr = attractor(&b, &[1]);
        assert!(!attr.contains(0));
        let attr = attractor(&b, &[1, 2]);
        assert_eq!(attr.rank[0], Some(1));
        assert!(solve_board(&b, &Impact::from_ints(&[2])).0.is_none());
        let (s, _) = solve_board(&b, &Impact::from_ints(&[3]));
        let s = s.unwrap();
        assert_eq!(s.expected_impact, Impact::from_ints(&[3]));
        assert!(is_closed(&b, &s));
    }

    #[test]
    fn circle_needs_one_child() {
        let mut b = GameBoard::new(Player::Circle, 1, "s");
        for c in [5, 2] {
            let sq = b.add_child(0, Player::Square, "q", Rational::one(), Impact::zero(1));
            let f = b.add_child(sq, Player::Circle, "f", Rational::one(), Impact::from_ints(&[c]));
            b.mark_final(f);
        }
        let (s, _) = solve_board(&b, &Impact::from_ints(&[4]));
        let s = s.unwrap();
        assert_eq!(s.choices[&0], 3);
        assert_eq!(s.expected_impact.components()[0], int(2));
    }

    #[test]
    fn huge_bounds_use_exact_path() {
        let b = flat_board(&[1, 1]);
        let huge = Impact::new(vec![Rational::new(BigInt::from(10).pow(60), BigInt::from(7))]);
        assert!(solve_board(&b, &huge).0.is_some());
    }
}
