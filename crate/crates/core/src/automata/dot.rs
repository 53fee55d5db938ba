use std::fmt::Write;

use super::generator::{Generator, StateId};

/// Graphviz rendering: one node per state, double circles for marked
/// states, an arrow from an invisible node into the initial state.
/// Parallel transitions between the same pair of states share one edge.
pub fn to_dot(g: &Generator, name: &str) -> String {
    to_dot_with_labels(g, name, |s| s.to_string())
}

pub fn to_dot_with_labels(
    g: &Generator,
    name: &str,
    label: impl Fn(StateId) -> String,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  __start [shape=point];\n");
    for s in 0..g.num_states() {
        let shape = if g.is_marked(s) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  {s} [shape={shape}, label=\"{}\"];", escape(&label(s)));
    }
    if let Some(q0) = g.initial() {
        let _ = writeln!(out, "  __start -> {q0};");
    }
    for s in 0..g.num_states() {
        let mut edges: Vec<(StateId, Vec<String>)> = Vec::new();
        for (e, t) in g.transitions_from(s) {
            match edges.iter_mut().find(|(dst, _)| *dst == t) {
                Some((_, labels)) => labels.push(e.to_string()),
                None => edges.push((t, vec![e.to_string()])),
            }
        }
        edges.sort_by_key(|(t, _)| *t);
        for (t, labels) in edges {
            let _ = writeln!(out, "  {s} -> {t} [label=\"{}\"];", labels.join(","));
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;

    #[test]
    fn renders_marked_and_edges() {
        let mut g = Generator::with_states(2, [Event(1), Event::TICK]);
        g.add_transition(0, Event(1), 1).unwrap();
        g.add_transition(0, Event::TICK, 1).unwrap();
        g.set_marked(1, true).unwrap();
        let dot = to_dot(&g, "G");
        assert!(dot.starts_with("digraph \"G\" {"));
        assert!(dot.contains("1 [shape=doublecircle"));
        assert!(dot.contains("0 [shape=circle"));
        assert!(dot.contains("0 -> 1 [label=\"tick,1\"];"));
        assert!(dot.contains("__start -> 0;"));
    }
}
