use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::graph::{ActorKind, DataflowGraph};

const KINDS: [&str; 12] = [
    "Operator",
    "Decider",
    "TrueGate",
    "FalseGate",
    "Merge",
    "StaticWhere",
    "DynamicWhere",
    "When",
    "Source",
    "Sink",
    "Const",
    "Copy",
];

/// Actor counts of a graph.
///
/// `total_actors_excluding_copies` counts computing actors only: copies,
/// sources, sinks and constants are left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoweringStats {
    pub counts: BTreeMap<String, usize>,
    pub gate_plus_merge: usize,
    pub total_actors_excluding_copies: usize,
    pub total_actors: usize,
}

impl LoweringStats {
    pub fn count(&self, kind: &str) -> usize {
        self.counts.get(kind).copied().unwrap_or(0)
    }
}

pub fn stats(g: &DataflowGraph) -> LoweringStats {
    let mut counts: BTreeMap<String, usize> = KINDS.iter().map(|k| (k.to_string(), 0)).collect();
    for a in &g.actors {
        *counts.entry(a.kind.label().to_string()).or_insert(0) += 1;
    }
    let gate_plus_merge = counts["TrueGate"] + counts["FalseGate"] + counts["Merge"];
    let total_actors_excluding_copies = g
        .actors
        .iter()
        .filter(|a| !matches!(a.kind, ActorKind::Copy { .. } | ActorKind::Source { .. } | ActorKind::Sink { .. } | ActorKind::Const { .. }))
        .count();
    LoweringStats { counts, gate_plus_merge, total_actors_excluding_copies, total_actors: g.actors.len() }
}

impl fmt::Display for LoweringStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in KINDS {
            writeln!(f, "{k:<14}{:>6}", self.count(k))?;
        }
        writeln!(f, "{:<14}{:>6}", "gates+merges", self.gate_plus_merge)?;
        writeln!(f, "{:<14}{:>6}", "actors", self.total_actors_excluding_copies)?;
        write!(f, "{:<14}{:>6}", "all actors", self.total_actors)
    }
}
