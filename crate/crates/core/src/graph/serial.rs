//! JSON graph files: `{"actors": [...], "arcs": [...], "initial_tokens": [...]}`.
//!
//! Each actor is `{"id", "kind", "params"}`; each arc is
//! `{"src", "src_port", "dst", "dst_port", "kind"}`; each initial token is
//! `{"arc_index", "token"}`. Floats are written in shortest round-trip form.

use std::collections::HashSet;

use thiserror::Error;

use super::{validate, DataflowGraph, ValidationReport};

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("arc {arc} references unknown actor {actor}")]
    UnknownActor { arc: usize, actor: u32 },
    #[error("invalid graph:\n{0}")]
    Invalid(ValidationReport),
}

pub fn serialize(graph: &DataflowGraph) -> Result<String, SerialError> {
    let report = validate(graph);
    if !report.is_valid() {
        return Err(SerialError::Invalid(report));
    }
    Ok(serde_json::to_string_pretty(graph).expect("graph values are always representable"))
}

pub fn deserialize(text: &str) -> Result<DataflowGraph, SerialError> {
    let graph: DataflowGraph = serde_json::from_str(text).map_err(|e| SerialError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let ids: HashSet<_> = graph.actors.iter().map(|a| a.id).collect();
    for (i, arc) in graph.arcs.iter().enumerate() {
        for end in [arc.src, arc.dst] {
            if !ids.contains(&end) {
                return Err(SerialError::UnknownActor { arc: i, actor: end.0 });
            }
        }
    }
    let report = validate(&graph);
    if !report.is_valid() {
        return Err(SerialError::Invalid(report));
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ActorKind;

    #[test]
    fn malformed_input_has_position() {
        match deserialize("{") {
            Err(SerialError::Parse { line, column, .. }) => {
                assert_eq!(line, 1);
                assert!(column >= 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_actor_reported() {
        let text = r#"{"actors":[{"id":0,"kind":"Const","params":{"value":1.0}}],
            "arcs":[{"src":0,"src_port":0,"dst":7,"dst_port":0,"kind":"data"}],
            "initial_tokens":[]}"#;
        match deserialize(text) {
            Err(SerialError::UnknownActor { actor, .. }) => assert_eq!(actor, 7),
            other => panic!("expected unknown actor, got {other:?}"),
        }
    }

    #[test]
    fn field_names_are_stable() {
        let mut g = DataflowGraph::new();
        let c = g.add_actor(ActorKind::Const { value: 0.1 });
        let s = g.add_actor(ActorKind::Sink { name: "y".into() });
        g.connect(c, 0, s, 0);
        let text = serialize(&g).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["actors"][0]["kind"], "Const");
        assert_eq!(v["actors"][0]["params"]["value"], 0.1);
        assert_eq!(v["arcs"][0]["src_port"], 0);
        assert_eq!(v["arcs"][0]["kind"], "data");
        assert!(v["initial_tokens"].as_array().unwrap().is_empty());
        assert_eq!(deserialize(&text).unwrap(), g);
    }

    #[test]
    fn invalid_graph_refused() {
        let mut g = DataflowGraph::new();
        g.add_actor(ActorKind::Sink { name: "y".into() });
        assert!(matches!(serialize(&g), Err(SerialError::Invalid(_))));
    }
}
