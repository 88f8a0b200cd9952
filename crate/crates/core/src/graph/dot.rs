use std::fmt::Write;

use super::{ActorKind, ArcKind, DataflowGraph};

fn node_label(kind: &ActorKind) -> String {
    match kind {
        ActorKind::Operator { name, formula, .. } => format!("Operator {name}\\n{formula}"),
        ActorKind::Decider { name, predicate, .. } => format!("Decider {name}\\n{predicate}"),
        ActorKind::StaticWhere { pattern } => format!("StaticWhere {}x{}", pattern.rows, pattern.cols),
        ActorKind::DynamicWhere { patterns } => {
            let (r, c) = patterns.first().map_or((0, 0), |p| p.shape());
            format!("DynamicWhere {r}x{c} [{}]", patterns.len())
        }
        ActorKind::When { config } => match &config.label {
            Some(label) => format!("When {label}"),
            None => format!("When k={}", config.k),
        },
        ActorKind::Source { name } => format!("Source {name}"),
        ActorKind::Sink { name } => format!("Sink {name}"),
        ActorKind::Const { value } => format!("Const {value}"),
        ActorKind::Copy { fanout, .. } => format!("Copy x{fanout}"),
        other => other.label().to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('"', "\\\"")
}

/// Renders `graph` as a DOT digraph: one node per actor, data arcs solid,
/// control arcs dashed, switch arcs bold. Output is sorted by actor id.
pub fn export_dot(graph: &DataflowGraph) -> String {
    if graph.actors.is_empty() {
        return "digraph { }\n".to_string();
    }
    let mut out = String::from("digraph {\n");
    for actor in graph.sorted_actors() {
        writeln!(out, "  n{} [label=\"{}: {}\"];", actor.id, actor.id, escape(&node_label(&actor.kind))).unwrap();
    }
    let mut arcs = graph.arcs.clone();
    arcs.sort_by_key(|a| (a.src, a.src_port, a.dst, a.dst_port));
    for arc in arcs {
        let style = match arc.kind {
            ArcKind::Data => "solid",
            ArcKind::Control => "dashed",
            ArcKind::Switch => "bold",
        };
        writeln!(
            out,
            "  n{} -> n{} [style={style}, taillabel=\"{}\", headlabel=\"{}\"];",
            arc.src, arc.dst, arc.src_port, arc.dst_port
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
