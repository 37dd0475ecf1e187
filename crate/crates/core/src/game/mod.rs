//! Cost games over net executions and the synthesis engine built on them.

mod board;
mod report;
mod solve;

use thiserror::Error;

use crate::rational::Impact;
use crate::semantics::SemanticsError;
use crate::spin::Spin;

pub use board::{build_game_board, BoardNode, GameBoard, NodeIdx, Player, DEFAULT_NODE_CAP};
pub use report::{strategy_report, Decision, FinalReport, StrategyReport};
pub use solve::{
    admissible_final_subsets, attractor, extract_strategy, for_each_admissible_subset, is_closed, solve_board,
    AttractorResult, SolveStats, StrategyTree,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("board too large: {nodes} nodes ({finals} finals) reached the cap of {cap}")]
    BoardTooLarge { nodes: usize, finals: usize, cap: usize },
    #[error("node {0} is not final")]
    NotFinal(NodeIdx),
    #[error("bound has {found} components, impacts have {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// A solved board.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub board: GameBoard,
    pub strategy: Option<StrategyTree>,
    pub stats: SolveStats,
}

/// Builds the board of `net` and searches for a strategy whose expected
/// impact is componentwise at most `bound`.
pub fn synthesize_strategy(net: &Spin, bound: &Impact, node_cap: usize) -> Result<Synthesis, GameError> {
    if bound.dim() != net.impact_dim() {
        return Err(GameError::DimensionMismatch { expected: net.impact_dim(), found: bound.dim() });
    }
    let board = build_game_board(net, node_cap)?;
    let (strategy, stats) = solve_board(&board, bound);
    Ok(Synthesis { board, strategy, stats })
}
