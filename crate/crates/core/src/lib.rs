//! Strategy synthesis for business processes with multiple impacts.
//!
//! Processes are block-structured diagrams whose exclusive splits are
//! resolved either by the controller or by nature. A process is translated
//! into a timed net, the net into a two-player game board, and the board is
//! solved for a strategy whose expected impact stays below a bound.

pub mod game;
pub mod oracle;
pub mod parser;
pub mod process;
pub mod rational;
pub mod semantics;
pub mod spin;

pub use rational::{Impact, Rational};
