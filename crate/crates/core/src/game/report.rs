//! Serializable view of a synthesis result.

use serde::{Deserialize, Serialize};

use super::{GameBoard, Synthesis};
use crate::process::{BpmnCpi, NodeKind};
use crate::rational::{format_rational, Impact};
use crate::spin::{ProvenanceMap, Spin};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub history_id: usize,
    /// Marking at the decision point as `place:age` pairs.
    pub state: String,
    /// Plain transitions fired by the chosen move.
    pub chosen: Vec<String>,
    /// Diagram nodes entered by the chosen branches.
    pub chosen_tasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub id: usize,
    pub cost: Vec<f64>,
    pub cost_exact: Vec<String>,
    pub probability: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub schema: u32,
    pub exists: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_impact: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_impact_exact: Option<Vec<String>>,
    pub bound: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decisions: Vec<Decision>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub finals: Vec<FinalReport>,
}

/// Branch targets of the controller choices among `plain`.
fn branch_targets(process: &BpmnCpi, provenance: &ProvenanceMap, names: &[&str]) -> Vec<String> {
    let diagram = process.diagram();
    let mut out = Vec::new();
    for name in names {
        let Some(gateway) = provenance.get(*name) else { continue };
        if !matches!(diagram.kind(gateway), Some(NodeKind::Split(_))) || process.nature_prob(gateway).is_some() {
            continue;
        }
        let heads = diagram.ordered_successors(gateway);
        let side = if name.ends_with(".left") { 0 } else if name.ends_with(".right") { 1 } else { continue };
        if let Some(head) = heads.get(side) {
            out.push(head.to_string());
        }
    }
    out
}

fn decisions(
    board: &GameBoard,
    net: &Spin,
    source: Option<(&BpmnCpi, &ProvenanceMap)>,
    choices: &std::collections::BTreeMap<usize, usize>,
) -> Vec<Decision> {
    choices
        .iter()
        .filter(|(&c, _)| board.node(c).children.len() >= 2)
        .map(|(&c, &sq)| {
            let names: Vec<&str> = board.node(sq).part.iter().map(|&t| net.transition_name(t)).collect();
            Decision {
                history_id: c,
                state: board.node(c).state.as_ref().map(|q| q.render(net)).unwrap_or_default(),
                chosen: names.iter().map(|s| s.to_string()).collect(),
                chosen_tasks: source.map(|(p, prov)| branch_targets(p, prov, &names)).unwrap_or_default(),
            }
        })
        .collect()
}

/// The JSON-facing report of a synthesis run. Passing the source process
/// and provenance lets decisions name the diagram branches they select.
pub fn strategy_report(
    synthesis: &Synthesis,
    net: &Spin,
    bound: &Impact,
    source: Option<(&BpmnCpi, &ProvenanceMap)>,
) -> StrategyReport {
    let board = &synthesis.board;
    let Some(strategy) = &synthesis.strategy else {
        return StrategyReport {
            schema: 1,
            exists: false,
            expected_impact: None,
            expected_impact_exact: None,
            bound: bound.to_f64s(),
            decisions: Vec::new(),
            finals: Vec::new(),
        };
    };
    let costs = board.final_costs();
    let finals = strategy
        .reached_finals
        .iter()
        .map(|&f| {
            let cost = &costs[board.finals().binary_search(&f).unwrap()];
            FinalReport {
                id: f,
                cost: cost.to_f64s(),
                cost_exact: cost.to_strings(),
                probability: format_rational(&board.path_probability(f)),
            }
        })
        .collect();
    StrategyReport {
        schema: 1,
        exists: true,
        expected_impact: Some(strategy.expected_impact.to_f64s()),
        expected_impact_exact: Some(strategy.expected_impact.to_strings()),
        bound: bound.to_f64s(),
        decisions: decisions(board, net, source, &strategy.choices),
        finals,
    }
}
