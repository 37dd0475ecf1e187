//! Graphviz rendering of process diagrams.

use num_traits::One;

use crate::process::{gateway_partition, BpmnCpi, Gateway, NodeKind};
use crate::rational::format_rational;

/// Quotes a Graphviz identifier.
pub fn quote(id: &str) -> String {
    format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders a process as a `digraph`. Every node carries a `class` attribute
/// (`choice`, `nature`, `parallel_split`, `parallel_join`, `exclusive_join`,
/// `task` or `event`).
pub fn process_to_dot(process: &BpmnCpi) -> String {
    let diagram = process.diagram();
    let (nature, _) = gateway_partition(process);
    let mut out = String::from("digraph process {\n  rankdir=LR;\n");
    for (id, kind) in diagram.nodes() {
        let attrs = match kind {
            NodeKind::Event => format!("shape=circle, class=\"event\", label={}", quote(id)),
            NodeKind::Task => {
                let impact = process.impact(id).map(ToString::to_string).unwrap_or_default();
                let duration = process.duration(id).unwrap_or(0);
                format!(
                    "shape=box, style=rounded, class=\"task\", label={}",
                    quote(&format!("{id}\n{impact}\nd={duration}"))
                )
            }
            NodeKind::Split(Gateway::Exclusive) if nature.contains(id) => {
                format!("shape=diamond, style=filled, fillcolor=lightgray, class=\"nature\", label={}", quote(id))
            }
            NodeKind::Split(Gateway::Exclusive) => format!("shape=diamond, class=\"choice\", label={}", quote(id)),
            NodeKind::Split(Gateway::Parallel) => "shape=diamond, class=\"parallel_split\", label=\"+\"".to_string(),
            NodeKind::Join(Gateway::Parallel) => "shape=diamond, class=\"parallel_join\", label=\"+\"".to_string(),
            NodeKind::Join(Gateway::Exclusive) => "shape=diamond, class=\"exclusive_join\", label=\"X\"".to_string(),
        };
        out.push_str(&format!("  {} [{attrs}];\n", quote(id)));
    }
    for (u, v) in diagram.edges() {
        let label = process.nature_prob(u).map(|p| {
            if diagram.is_default_edge(u, v) {
                format_rational(p)
            } else {
                format_rational(&(crate::rational::Rational::one() - p))
            }
        });
        match label {
            Some(l) => out.push_str(&format!("  {} -> {} [label={}];\n", quote(u), quote(v), quote(&l))),
            None => out.push_str(&format!("  {} -> {};\n", quote(u), quote(v))),
        }
    }
    out.push_str("}\n");
    out
}
