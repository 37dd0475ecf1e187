use super::Spin;
use crate::parser::quote;
use crate::rational::format_rational;

/// Graphviz rendering: places as circles, transitions as bars. Probabilistic
/// transitions show their probability, task exits their impact.
pub fn spin_to_dot(net: &Spin) -> String {
    let mut out = String::from("digraph spin {\n  rankdir=LR;\n");
    for p in 0..net.place_count() {
        let name = net.place_name(p);
        let label = match net.duration(p) {
            0 => name.to_string(),
            d => format!("{name}\nD={d}"),
        };
        out.push_str(&format!("  {} [shape=circle, class=\"place\", label={}];\n", quote(name), quote(&label)));
    }
    for t in 0..net.transition_count() {
        let name = net.transition_name(t);
        let mut label = name.to_string();
        if let Some(p) = net.prob(t) {
            label.push_str(&format!("\nPr={}", format_rational(p)));
        }
        if !net.is_silent(t) {
            label.push_str(&format!("\n{}", net.impact(t)));
        }
        let class = if net.is_probabilistic(t) { "prob_transition" } else { "transition" };
        out.push_str(&format!(
            "  {} [shape=box, style=filled, fillcolor=black, height=0.1, width=0.5, class=\"{class}\", label=\"\", xlabel={}];\n",
            quote(name),
            quote(&label)
        ));
    }
    for (u, v) in net.arcs() {
        out.push_str(&format!("  {} -> {};\n", quote(u), quote(v)));
    }
    out.push_str("}\n");
    out
}
