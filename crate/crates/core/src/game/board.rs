//! Game boards: trees alternating controller (circle) and nature (square)
//! positions.

use std::collections::VecDeque;

use num_traits::One;
use serde::Serialize;

use super::GameError;
use crate::parser::quote;
use crate::rational::{format_rational, Impact, Rational};
use crate::semantics::{enumerate_mnce, fire, initial_saturated, pvariants_among, saturate, MarkingState, Mnce};
use crate::spin::{Spin, TransIdx};

pub type NodeIdx = usize;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    /// The controller picks one successor.
    Circle,
    /// Nature; every successor must be handled.
    Square,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardNode {
    pub player: Player,
    pub parent: Option<NodeIdx>,
    pub children: Vec<NodeIdx>,
    /// Last marking of the history, kept on circle nodes of net boards.
    pub state: Option<MarkingState>,
    /// Transitions resolved on the move into this node: the probabilistic
    /// part for circle nodes, the plain part for square nodes.
    pub part: Vec<TransIdx>,
    pub label: String,
    /// Probability of `part` (1 for square nodes).
    pub prob: Rational,
    /// Impact of `part`.
    pub impact: Impact,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameBoard {
    nodes: Vec<BoardNode>,
    finals: Vec<NodeIdx>,
    impact_dim: usize,
}

impl GameBoard {
    /// A board holding only its start node.
    pub fn new(start: Player, impact_dim: usize, label: impl Into<String>) -> Self {
        GameBoard {
            nodes: vec![BoardNode {
                player: start,
                parent: None,
                children: Vec::new(),
                state: None,
                part: Vec::new(),
                label: label.into(),
                prob: Rational::one(),
                impact: Impact::zero(impact_dim),
            }],
            finals: Vec::new(),
            impact_dim,
        }
    }

    /// Appends a child; node indices therefore grow away from the root.
    pub fn add_child(
        &mut self,
        parent: NodeIdx,
        player: Player,
        label: impl Into<String>,
        prob: Rational,
        impact: Impact,
    ) -> NodeIdx {
        assert_eq!(impact.dim(), self.impact_dim, "impact dimension mismatch");
        let idx = self.nodes.len();
        self.nodes.push(BoardNode {
            player,
            parent: Some(parent),
            children: Vec::new(),
            state: None,
            part: Vec::new(),
            label: label.into(),
            prob,
            impact,
        });
        self.nodes[parent].children.push(idx);
        idx
    }

    /// Marks a childless circle node as final.
    pub fn mark_final(&mut self, node: NodeIdx) {
        assert!(self.nodes[node].children.is_empty(), "finals have no moves");
        self.finals.push(node);
        self.finals.sort_unstable();
    }

    pub fn start(&self) -> NodeIdx {
        0
    }

    pub fn node(&self, idx: NodeIdx) -> &BoardNode {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[BoardNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn move_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    pub fn finals(&self) -> &[NodeIdx] {
        &self.finals
    }

    pub fn is_final(&self, idx: NodeIdx) -> bool {
        self.finals.binary_search(&idx).is_ok()
    }

    pub fn impact_dim(&self) -> usize {
        self.impact_dim
    }

    /// Nodes from the start to `idx`, inclusive.
    pub fn path_to(&self, idx: NodeIdx) -> Vec<NodeIdx> {
        let mut path = vec![idx];
        let mut cur = idx;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Probability of reaching a node: the product of the circle-node
    /// probabilities along its path.
    pub fn path_probability(&self, idx: NodeIdx) -> Rational {
        self.path_to(idx)
            .into_iter()
            .filter(|&n| self.nodes[n].player == Player::Circle)
            .fold(Rational::one(), |acc, n| acc * &self.nodes[n].prob)
    }

    /// Path probability times the summed impact along the path.
    pub fn final_cost(&self, s: NodeIdx) -> Result<Impact, GameError> {
        if !self.is_final(s) {
            return Err(GameError::NotFinal(s));
        }
        let mut total = Impact::zero(self.impact_dim);
        for n in self.path_to(s) {
            total += &self.nodes[n].impact;
        }
        Ok(total.scale(&self.path_probability(s)))
    }

    /// Costs of every final, in final order, computed in a single sweep.
    pub fn final_costs(&self) -> Vec<Impact> {
        let mut acc: Vec<(Rational, Impact)> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let (prob, impact) = match node.parent {
                None => (Rational::one(), Impact::zero(self.impact_dim)),
                Some(p) => acc[p].clone(),
            };
            debug_assert!(node.parent.is_none_or(|p| p < i));
            let prob = if node.player == Player::Circle { prob * &node.prob } else { prob };
            acc.push((prob, &impact + &node.impact));
        }
        self.finals.iter().map(|&f| acc[f].1.scale(&acc[f].0)).collect()
    }

    /// Graphviz rendering; `ranks` (attractor ranks) are shown when given.
    pub fn to_dot(&self, ranks: Option<&[Option<usize>]>) -> String {
        let mut out = String::from("digraph board {\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let shape = match node.player {
                Player::Circle => "circle",
                Player::Square => "box",
            };
            let mut label = format!("{i}\n{}", node.label);
            if let Some(rank) = ranks.and_then(|r| r[i]) {
                label.push_str(&format!("\nrank {rank}"));
            }
            let extra = if self.is_final(i) { ", peripheries=2" } else { "" };
            out.push_str(&format!("  n{i} [shape={shape}{extra}, label={}];\n", quote(&label)));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                let child = &self.nodes[c];
                if child.player == Player::Circle && !child.prob.is_one() {
                    out.push_str(&format!("  n{i} -> n{c} [label={}];\n", quote(&format_rational(&child.prob))));
                } else {
                    out.push_str(&format!("  n{i} -> n{c};\n"));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn part_label(net: &Spin, part: &[TransIdx]) -> String {
    let names: Vec<&str> = part.iter().map(|&t| net.transition_name(t)).collect();
    format!("{{{}}}", names.join(","))
}

/// Builds the game board of a net breadth first. Each circle node gets one
/// square child per distinct plain part of its maximal sets (in
/// lexicographic order); each square gets one circle child per probabilistic
/// variant.
pub fn build_game_board(net: &Spin, node_cap: usize) -> Result<GameBoard, GameError> {
    let q0 = initial_saturated(net)?;
    let mut board = GameBoard::new(Player::Circle, net.impact_dim(), "{}");
    board.nodes[0].state = Some(q0);
    let mut queue = VecDeque::from([0usize]);
    let too_large = |board: &GameBoard| GameError::BoardTooLarge {
        nodes: board.len(),
        finals: board.finals.len(),
        cap: node_cap,
    };

    while let Some(circle) = queue.pop_front() {
        let q = board.nodes[circle].state.clone().unwrap();
        if q.is_final(net) {
            board.finals.push(circle);
            continue;
        }
        let mnces = enumerate_mnce(net, &q)?;
        let mut plains: Vec<Vec<TransIdx>> = mnces.iter().map(|m| m.plain_part(net)).collect();
        plains.sort();
        plains.dedup();
        for plain in plains {
            if board.len() >= node_cap {
                return Err(too_large(&board));
            }
            let mut impact = Impact::zero(net.impact_dim());
            for &t in &plain {
                impact += net.impact(t);
            }
            let square = board.add_child(circle, Player::Square, part_label(net, &plain), Rational::one(), impact);
            board.nodes[square].part = plain.clone();

            let rep: &Mnce = mnces.iter().find(|m| m.plain_part(net) == plain).unwrap();
            for variant in pvariants_among(net, rep, &mnces) {
                if board.len() >= node_cap {
                    return Err(too_large(&board));
                }
                let prob_part = variant.prob_part(net);
                let mut prob = Rational::one();
                let mut impact = Impact::zero(net.impact_dim());
                for &t in &prob_part {
                    prob *= net.prob(t).unwrap();
                    impact += net.impact(t);
                }
                let next = saturate(net, &fire(net, &q, variant.transitions()))?;
                let child = board.add_child(square, Player::Circle, part_label(net, &prob_part), prob, impact);
                board.nodes[child].part = prob_part;
                board.nodes[child].state = Some(next);
                queue.push_back(child);
            }
        }
    }
    board.finals.sort_unstable();
    Ok(board)
}
