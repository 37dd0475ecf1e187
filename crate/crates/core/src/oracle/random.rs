//! Seeded generator of small well-formed processes and bounds.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{GameBoard, Player};
use crate::parser::{parse_process, Expr};
use crate::process::BpmnCpi;
use crate::rational::{int, ratio, Impact, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorParams {
    pub max_tasks: usize,
    pub impact_dim: usize,
    pub max_duration: u64,
    pub max_impact: i64,
    pub parallel: bool,
    pub loops: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { max_tasks: 6, impact_dim: 2, max_duration: 4, max_impact: 9, parallel: true, loops: false }
    }
}

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub seed: u64,
    pub text: String,
    pub expr: Expr,
    pub process: BpmnCpi,
}

struct Gen<'p> {
    rng: ChaCha8Rng,
    params: &'p GeneratorParams,
    counters: [usize; 4],
}

const DENOMINATORS: [i64; 4] = [2, 4, 5, 10];

impl Gen<'_> {
    fn fresh(&mut self, kind: usize) -> String {
        let prefix = ["T", "C", "N", "L"][kind];
        self.counters[kind] += 1;
        format!("{prefix}{}", self.counters[kind])
    }

    fn prob(&mut self) -> Rational {
        let d = *DENOMINATORS.choose(&mut self.rng).unwrap();
        ratio(self.rng.gen_range(1..d), d)
    }

    fn task(&mut self) -> Expr {
        let name = self.fresh(0);
        let impact = (0..self.params.impact_dim).map(|_| int(self.rng.gen_range(0..=self.params.max_impact))).collect();
        Expr::Task { name, impact, duration: self.rng.gen_range(1..=self.params.max_duration) }
    }

    fn split(&mut self, n: usize) -> (usize, usize) {
        let left = self.rng.gen_range(1..n);
        (left, n - left)
    }

    fn expr(&mut self, n: usize) -> Expr {
        if n <= 1 {
            return self.task();
        }
        let mut kinds = vec![0, 2, 3];
        if self.params.parallel {
            kinds.push(1);
        }
        if self.params.loops {
            kinds.push(4);
        }
        match *kinds.choose(&mut self.rng).unwrap() {
            0 => {
                let (a, b) = self.split(n);
                Expr::seq(vec![self.expr(a), self.expr(b)])
            }
            1 => {
                let (a, b) = self.split(n);
                Expr::par(vec![self.expr(a), self.expr(b)])
            }
            2 => {
                let (a, b) = self.split(n);
                let name = self.fresh(1);
                Expr::Choice { name, left: Box::new(self.expr(a)), right: Box::new(self.expr(b)) }
            }
            3 => {
                let (a, b) = self.split(n);
                let name = self.fresh(2);
                let prob = self.prob();
                Expr::Nature { name, prob, left: Box::new(self.expr(a)), right: Box::new(self.expr(b)) }
            }
            _ => {
                let name = self.fresh(3);
                let prob = self.prob();
                let body = self.expr((n / 2).max(1));
                Expr::Loop { name, prob, max: self.rng.gen_range(1..=2), body: Box::new(body) }
            }
        }
    }
}

/// A process drawn from `seed`; its text parses back to the returned process.
pub fn random_instance(seed: u64, params: &GeneratorParams) -> RandomInstance {
    let mut gen = Gen { rng: ChaCha8Rng::seed_from_u64(seed), params, counters: [0; 4] };
    let n = gen.rng.gen_range(1..=params.max_tasks.max(1));
    let expr = gen.expr(n);
    let text = expr.render();
    let process = parse_process(&text).expect("generated text parses");
    RandomInstance { seed, text, expr, process }
}

/// `count` bounds drawn near the given expected impacts. Exact values and
/// values nudged just below them sit on the verdict boundary; the rest are
/// random points of the bounding box.
pub fn bounds_around(values: &[Impact], seed: u64, count: usize) -> Vec<Impact> {
    assert!(!values.is_empty(), "need at least one value");
    let dim = values[0].dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo: Vec<Rational> = (0..dim).map(|k| values.iter().map(|v| v.components()[k].clone()).min().unwrap()).collect();
    let hi: Vec<Rational> = (0..dim).map(|k| values.iter().map(|v| v.components()[k].clone()).max().unwrap()).collect();
    let tiny = ratio(1, 1000);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = values.choose(&mut rng).unwrap();
        let b = match rng.gen_range(0..4) {
            0 => v.clone(),
            1 if dim > 0 => {
                let k = rng.gen_range(0..dim);
                let mut c = v.clone().into_components();
                c[k] -= &tiny;
                Impact::new(c)
            }
            2 => Impact::new(hi.iter().map(|h| h + &tiny).collect()),
            _ => Impact::new(
                (0..dim)
                    .map(|k| {
                        let t = ratio(rng.gen_range(0..=10), 10);
                        &lo[k] + (&hi[k] - &lo[k]) * t
                    })
                    .collect(),
            ),
        };
        out.push(b);
    }
    out
}

/// A random alternating tree of at most about `max_nodes` nodes with unit
/// probabilities and zero impacts, for exercising board algorithms.
pub fn random_board(seed: u64, max_nodes: usize) -> GameBoard {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = if rng.gen_bool(0.5) { Player::Circle } else { Player::Square };
    let mut board = GameBoard::new(start, 1, "n0");
    let mut frontier = vec![0];
    while let Some(n) = frontier.pop() {
        if board.len() >= max_nodes {
            break;
        }
        let player = match board.node(n).player {
            Player::Circle => Player::Square,
            Player::Square => Player::Circle,
        };
        for _ in 0..rng.gen_range(0..=3) {
            let c = board.add_child(n, player, format!("n{}", board.len()), Rational::from_integer(1.into()), Impact::zero(1));
            frontier.push(c);
        }
    }
    board
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_parseable() {
        let params = GeneratorParams { loops: true, ..GeneratorParams::default() };
        for seed in 0..50 {
            let a = random_instance(seed, &params);
            let b = random_instance(seed, &params);
            assert_eq!(a.text, b.text);
            assert!(a.expr.task_count() <= params.max_tasks);
        }
    }

    #[test]
    fn boards_respect_size() {
        for seed in 0..20 {
            let b = random_board(seed, 15);
            assert!(b.len() <= 15 + 3);
        }
    }

    #[test]
    fn bounds_have_requested_count() {
        let vals = [Impact::from_ints(&[1, 5]), Impact::from_ints(&[3, 2])];
        let b = bounds_around(&vals, 7, 25);
        assert_eq!(b.len(), 25);
        assert!(b.iter().all(|x| x.dim() == 2));
    }
}
