//! Encoding of number partitioning as a board.

use num_traits::One;

use crate::game::{GameBoard, Player};
use crate::rational::{int, Impact, Rational};

/// Can `values` be split into two halves of equal sum?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionInstance {
    pub values: Vec<u64>,
}

impl PartitionInstance {
    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }
}

/// A nature start with one controller position per value; the controller
/// puts the value on the first or the second side. The third impact
/// component counts reached finals and keeps both options of a position from
/// being taken together.
pub fn partition_to_game(instance: &PartitionInstance) -> (GameBoard, Impact) {
    let mut board = GameBoard::new(Player::Square, 3, "p0");
    for (i, &v) in instance.values.iter().enumerate() {
        let pos = board.add_child(0, Player::Circle, format!("p{}", i + 1), Rational::one(), Impact::zero(3));
        let v = int(v as i64);
        for (side, impact) in [("a", vec![v.clone(), int(0), int(1)]), ("b", vec![int(0), v, int(1)])] {
            let f = board.add_child(pos, Player::Circle, format!("p{}{side}", i + 1), Rational::one(), Impact::new(impact));
            board.mark_final(f);
        }
    }
    let half = Rational::new((instance.total() as i64).into(), 2.into());
    let bound = Impact::new(vec![half.clone(), half, int(instance.values.len() as i64)]);
    (board, bound)
}

/// Tries all 2^n sides.
pub fn exhaustive_partition(instance: &PartitionInstance) -> bool {
    let n = instance.values.len();
    assert!(n < 32, "too many values for exhaustive search");
    let total = instance.total();
    (0u64..1 << n).any(|mask| {
        let side: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| instance.values[i]).sum();
        2 * side == total
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::solve_board;

    #[test]
    fn small_instances() {
        for (values, expected) in [(vec![1, 2, 3], true), (vec![1, 2, 4], false), (vec![5, 5], true), (vec![7], false)] {
            let inst = PartitionInstance { values };
            assert_eq!(exhaustive_partition(&inst), expected);
            let (board, bound) = partition_to_game(&inst);
            assert_eq!(solve_board(&board, &bound).0.is_some(), expected, "{:?}", inst.values);
        }
    }
}
