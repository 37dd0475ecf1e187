//! Independent engines used to cross-check the game solver.

mod brute;
mod partition;
mod random;
mod recursive;

use thiserror::Error;

use crate::semantics::SemanticsError;

pub use brute::{
    brute_force_board, brute_force_expected_impacts, AssignmentOutcome, DEFAULT_ASSIGNMENT_CAP,
};
pub use partition::{exhaustive_partition, partition_to_game, PartitionInstance};
pub use random::{bounds_around, random_board, random_instance, GeneratorParams, RandomInstance};
pub use recursive::{decide_strategy_exists, RecursiveVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search deeper than the {0} transitions of the net")]
    DepthExceeded(usize),
    #[error("more than {0} choice assignments")]
    TooManyAssignments(usize),
    #[error("bound has {found} components, impacts have {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}
