//! Engine dispatch shared by the command line and the HTTP service, so both
//! produce the same JSON.

use std::fmt::Write as _;

use cpi_core::game::{attractor, build_game_board, solve_board, strategy_report, GameError, StrategyReport};
use cpi_core::oracle::{brute_force_expected_impacts, decide_strategy_exists, OracleError, DEFAULT_ASSIGNMENT_CAP};
use cpi_core::parser::{parse_process, process_to_dot, ParseError};
use cpi_core::process::{validate_sese, BpmnCpi, Gateway, NodeKind};
use cpi_core::rational::{format_rational, parse_rational};
use cpi_core::spin::{translate_to_spin, validate_structured_acyclic, ProvenanceMap, Spin};
use cpi_core::Impact;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Game,
    Recursive,
    Brute,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AppError {
    Parse(ParseError),
    Invalid(String),
    Budget(String),
    Disagreement(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Parse(_) | AppError::Invalid(_) => 2,
            AppError::Budget(_) => 3,
            AppError::Disagreement(_) => 4,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Parse(e) => write!(f, "parse error at {e}"),
            AppError::Invalid(m) => write!(f, "invalid input: {m}"),
            AppError::Budget(m) => write!(f, "budget exceeded: {m}"),
            AppError::Disagreement(m) => write!(f, "engines disagree: {m}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<GameError> for AppError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::BoardTooLarge { .. } => AppError::Budget(e.to_string()),
            other => AppError::Invalid(other.to_string()),
        }
    }
}

impl From<OracleError> for AppError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooManyAssignments(_) => AppError::Budget(e.to_string()),
            other => AppError::Invalid(other.to_string()),
        }
    }
}

/// A model after parsing and translation to a net.
pub struct Loaded {
    pub process: BpmnCpi,
    pub net: Spin,
    pub provenance: ProvenanceMap,
}

/// Parses and translates a model, rejecting anything that fails validation.
pub fn load(text: &str) -> Result<Loaded, AppError> {
    let process = parse_process(text).map_err(AppError::Parse)?;
    let report = validate_sese(process.diagram());
    if !report.is_ok() {
        let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(AppError::Invalid(lines.join("; ")));
    }
    let (net, provenance) = translate_to_spin(&process).map_err(|e| AppError::Invalid(e.to_string()))?;
    let report = validate_structured_acyclic(&net);
    if !report.is_ok() {
        let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(AppError::Invalid(lines.join("; ")));
    }
    Ok(Loaded { process, net, provenance })
}

/// Parses a bound such as `155,7.5` or `1/2,3`.
pub fn parse_bound(text: &str) -> Result<Impact, AppError> {
    text.split(',')
        .map(|c| parse_rational(c.trim()))
        .collect::<Result<Vec<_>, _>>()
        .map(Impact::new)
        .map_err(|e| AppError::Invalid(format!("bound `{text}`: {e}")))
}

fn check_bound(loaded: &Loaded, bound: &Impact) -> Result<(), AppError> {
    if bound.dim() != loaded.net.impact_dim() {
        return Err(AppError::Invalid(format!(
            "bound has {} components, impacts have {}",
            bound.dim(),
            loaded.net.impact_dim()
        )));
    }
    if !bound.is_nonnegative() {
        return Err(AppError::Invalid(format!("bound {bound} has a negative component")));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BoardStats {
    pub nodes: usize,
    pub finals: usize,
    pub moves: usize,
    pub subsets_tried: usize,
    pub finals_considered: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: StrategyReport,
    /// Present when a board was built.
    pub stats: Option<BoardStats>,
}

fn bare_report(exists: bool, impact: Option<Impact>, bound: &Impact) -> StrategyReport {
    StrategyReport {
        schema: 1,
        exists,
        expected_impact: impact.as_ref().map(Impact::to_f64s),
        expected_impact_exact: impact.as_ref().map(Impact::to_strings),
        bound: bound.to_f64s(),
        decisions: Vec::new(),
        finals: Vec::new(),
    }
}

fn run_game(loaded: &Loaded, bound: &Impact, node_cap: usize) -> Result<RunOutcome, AppError> {
    let board = build_game_board(&loaded.net, node_cap)?;
    let (strategy, solve) = solve_board(&board, bound);
    let stats = BoardStats {
        nodes: board.len(),
        finals: board.finals().len(),
        moves: board.move_count(),
        subsets_tried: solve.subsets_tried,
        finals_considered: solve.finals_considered,
    };
    let synthesis = cpi_core::game::Synthesis { board, strategy, stats: solve };
    let report = strategy_report(&synthesis, &loaded.net, bound, Some((&loaded.process, &loaded.provenance)));
    Ok(RunOutcome { report, stats: Some(stats) })
}

fn run_recursive(loaded: &Loaded, bound: &Impact) -> Result<RunOutcome, AppError> {
    let verdict = decide_strategy_exists(&loaded.net, bound)?;
    let used = verdict.residual.map(|r| bound - &r);
    Ok(RunOutcome { report: bare_report(verdict.exists, used, bound), stats: None })
}

fn run_brute(loaded: &Loaded, bound: &Impact) -> Result<RunOutcome, AppError> {
    let outcomes = brute_force_expected_impacts(&loaded.net, DEFAULT_ASSIGNMENT_CAP)?;
    let fit = outcomes.into_iter().find(|o| o.expected_impact.le(bound)).map(|o| o.expected_impact);
    Ok(RunOutcome { report: bare_report(fit.is_some(), fit, bound), stats: None })
}

/// Runs the selected engine. `All` runs every engine, fails on any
/// disagreement and otherwise returns the game engine's result.
pub fn synthesize(loaded: &Loaded, bound: &Impact, engine: Engine, node_cap: usize) -> Result<RunOutcome, AppError> {
    check_bound(loaded, bound)?;
    match engine {
        Engine::Game => run_game(loaded, bound, node_cap),
        Engine::Recursive => run_recursive(loaded, bound),
        Engine::Brute => run_brute(loaded, bound),
        Engine::All => {
            let game = run_game(loaded, bound, node_cap)?;
            let recursive = run_recursive(loaded, bound)?;
            let brute = run_brute(loaded, bound)?;
            let verdicts = [game.report.exists, recursive.report.exists, brute.report.exists];
            if verdicts.iter().any(|&v| v != verdicts[0]) {
                return Err(AppError::Disagreement(format!(
                    "game {}, recursive {}, brute force {}",
                    verdicts[0], verdicts[1], verdicts[2]
                )));
            }
            Ok(game)
        }
    }
}

/// The strategy JSON emitted by both front ends.
pub fn report_json(report: &StrategyReport) -> String {
    serde_json::to_string(report).expect("reports serialize")
}

pub fn report_human(report: &StrategyReport) -> String {
    let fmt = |v: &[String]| format!("[{}]", v.join(", "));
    let bound: Vec<String> = report.bound.iter().map(ToString::to_string).collect();
    let mut out = format!("exists: {}\nbound: {}\n", report.exists, fmt(&bound));
    if let Some(exact) = &report.expected_impact_exact {
        let _ = writeln!(out, "expected impact: {}", fmt(exact));
    }
    for d in &report.decisions {
        let _ = writeln!(out, "decision {} at {}: fire {} -> {}", d.history_id, d.state, fmt(&d.chosen), fmt(&d.chosen_tasks));
    }
    for f in &report.finals {
        let _ = writeln!(out, "final {}: probability {} cost {}", f.id, f.probability, fmt(&f.cost_exact));
    }
    out
}

/// Board in Graphviz form, annotated with attractor ranks of the winning
/// target when a strategy exists.
pub fn board_dot(loaded: &Loaded, bound: Option<&Impact>, node_cap: usize) -> Result<String, AppError> {
    let board = build_game_board(&loaded.net, node_cap)?;
    let ranks = match bound {
        Some(b) => {
            check_bound(loaded, b)?;
            solve_board(&board, b).0.map(|s| attractor(&board, &s.target).rank)
        }
        None => None,
    };
    Ok(board.to_dot(ranks.as_deref()))
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagramNode {
    pub id: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub impact: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagramEdge {
    pub from: String,
    pub to: String,
    pub default: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParseSummary {
    pub schema: u32,
    pub impact_dim: usize,
    pub nodes: Vec<DiagramNode>,
    pub edges: Vec<DiagramEdge>,
    pub places: usize,
    pub transitions: usize,
    pub dot: String,
}

/// Diagram description returned by the parse endpoint.
pub fn describe(loaded: &Loaded) -> ParseSummary {
    let process = &loaded.process;
    let diagram = process.diagram();
    let nodes = diagram
        .nodes()
        .map(|(id, kind)| {
            let kind = match kind {
                NodeKind::Event => "event",
                NodeKind::Task => "task",
                NodeKind::Split(_) if process.nature_prob(id).is_some() => "nature",
                NodeKind::Split(Gateway::Parallel) => "parallel_split",
                NodeKind::Split(_) => "choice",
                NodeKind::Join(Gateway::Parallel) => "parallel_join",
                NodeKind::Join(_) => "exclusive_join",
            };
            DiagramNode {
                id: id.to_string(),
                kind,
                impact: process.impact(id).map(Impact::to_strings),
                duration: process.duration(id),
                probability: process.nature_prob(id).map(format_rational),
            }
        })
        .collect();
    let edges = diagram
        .edges()
        .map(|(a, b)| DiagramEdge { from: a.to_string(), to: b.to_string(), default: diagram.is_default_edge(a, b) })
        .collect();
    ParseSummary {
        schema: 1,
        impact_dim: process.impact_dim(),
        nodes,
        edges,
        places: loaded.net.place_count(),
        transitions: loaded.net.transition_count(),
        dot: process_to_dot(process),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = include_str!("../../../models/example.cpi");

    #[test]
    fn engines_agree_on_example() {
        let loaded = load(EXAMPLE).unwrap();
        let bound = parse_bound("155,7.5").unwrap();
        let out = synthesize(&loaded, &bound, Engine::All, 1000).unwrap();
        assert_eq!(out.report.expected_impact_exact, Some(vec!["151".to_string(), "6.6".to_string()]));
        let rec = synthesize(&loaded, &bound, Engine::Recursive, 1000).unwrap();
        assert!(rec.report.exists && rec.stats.is_none());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(load("A[1]{1} ||").err().unwrap().exit_code(), 2);
        let loaded = load(EXAMPLE).unwrap();
        assert_eq!(synthesize(&loaded, &parse_bound("1").unwrap(), Engine::Game, 1000).unwrap_err().exit_code(), 2);
        assert_eq!(synthesize(&loaded, &parse_bound("1,1").unwrap(), Engine::Game, 5).unwrap_err().exit_code(), 3);
        assert!(parse_bound("1,x").is_err());
    }
}
