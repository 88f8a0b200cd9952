//! Dataflow graph model shared by both lowerings, the engine and the
//! fusion/mapping passes.
//!
//! A graph is a set of actors joined by point-to-point FIFO arcs. Every port is
//! typed by the kind of token it carries ([`ArcKind`]). Fan-out is never implicit:
//! a value consumed twice goes through an explicit [`ActorKind::Copy`].

mod dot;
mod formula;
mod serial;
mod validate;
mod when;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dot::export_dot;
pub use formula::{CmpOp, Formula, Predicate};
pub use serial::{deserialize, serialize, SerialError};
pub use validate::{validate, Severity, ValidationReport, Violation};
pub use when::{HalfSpace, Nonlinearity, PredicateLabel, Region, ResetRule, WhenConfig};

/// Unit of event-driven execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Token {
    Data(f64),
    Control(bool),
    /// Index into the receiving dynamic where's pattern table.
    Switch(u32),
}

impl Token {
    pub fn kind(&self) -> ArcKind {
        match self {
            Token::Data(_) => ArcKind::Data,
            Token::Control(_) => ArcKind::Control,
            Token::Switch(_) => ArcKind::Switch,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Data(v) => write!(f, "d:{v}"),
            Token::Control(b) => write!(f, "c:{b}"),
            Token::Switch(p) => write!(f, "s:{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Data,
    Control,
    Switch,
}

impl fmt::Display for ArcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcKind::Data => "data",
            ArcKind::Control => "control",
            ArcKind::Switch => "switch",
        })
    }
}

/// Boolean `rows x cols` adjacency matrix of a where primitive.
///
/// `matrix[o][i] == true` routes input `i` to output `o`. A column may route to
/// at most one output; an all-false column leaves that input untouched.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConnectionPattern {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<Vec<bool>>,
}

impl ConnectionPattern {
    pub fn new(matrix: Vec<Vec<bool>>) -> Self {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        Self { rows, cols, matrix }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, matrix: vec![vec![false; cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut p = Self::zeros(n, n);
        for i in 0..n {
            p.matrix[i][i] = true;
        }
        p
    }

    /// Builds a pattern from `route[i] = Some(o)` meaning input `i` goes to output `o`.
    pub fn from_routes(rows: usize, route: &[Option<usize>]) -> Self {
        let mut p = Self::zeros(rows, route.len());
        for (i, o) in route.iter().enumerate() {
            if let Some(o) = o {
                p.matrix[*o][i] = true;
            }
        }
        p
    }

    /// Output row input `col` is routed to, if any (first true entry).
    pub fn route(&self, col: usize) -> Option<usize> {
        (0..self.rows).find(|&o| self.matrix[o].get(col).copied().unwrap_or(false))
    }

    pub fn column_count(&self, col: usize) -> usize {
        self.matrix.iter().filter(|row| row.get(col).copied().unwrap_or(false)).count()
    }

    /// True when `matrix` really is `rows x cols`.
    pub fn is_well_shaped(&self) -> bool {
        self.matrix.len() == self.rows && self.matrix.iter().all(|r| r.len() == self.cols)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub u32);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum ActorKind {
    /// Computes one data output from `arity` data inputs.
    Operator { name: String, arity: usize, formula: Formula },
    /// Evaluates a predicate over `arity` data inputs and emits a control token.
    Decider { name: String, arity: usize, predicate: Predicate },
    TrueGate,
    FalseGate,
    /// Inputs: control, true-side data, false-side data.
    Merge,
    StaticWhere { pattern: ConnectionPattern },
    /// Input 0 is the switch port, followed by the data columns.
    DynamicWhere { patterns: Vec<ConnectionPattern> },
    When { config: WhenConfig },
    Source { name: String },
    /// Records the value bound to `name`; names starting with `_` are discards.
    Sink { name: String },
    Const { value: f64 },
    /// One input duplicated onto `fanout` outputs of the same kind.
    Copy { token: ArcKind, fanout: usize },
}

impl ActorKind {
    pub fn label(&self) -> &'static str {
        match self {
            ActorKind::Operator { .. } => "Operator",
            ActorKind::Decider { .. } => "Decider",
            ActorKind::TrueGate => "TrueGate",
            ActorKind::FalseGate => "FalseGate",
            ActorKind::Merge => "Merge",
            ActorKind::StaticWhere { .. } => "StaticWhere",
            ActorKind::DynamicWhere { .. } => "DynamicWhere",
            ActorKind::When { .. } => "When",
            ActorKind::Source { .. } => "Source",
            ActorKind::Sink { .. } => "Sink",
            ActorKind::Const { .. } => "Const",
            ActorKind::Copy { .. } => "Copy",
        }
    }

    pub fn is_where(&self) -> bool {
        matches!(self, ActorKind::StaticWhere { .. } | ActorKind::DynamicWhere { .. })
    }

    /// Token kinds of the input ports, in port order.
    pub fn input_ports(&self) -> Vec<ArcKind> {
        use ArcKind::*;
        match self {
            ActorKind::Operator { arity, .. } | ActorKind::Decider { arity, .. } => vec![Data; *arity],
            ActorKind::TrueGate | ActorKind::FalseGate => vec![Control, Data],
            ActorKind::Merge => vec![Control, Data, Data],
            ActorKind::StaticWhere { pattern } => vec![Data; pattern.cols],
            ActorKind::DynamicWhere { patterns } => {
                let cols = patterns.first().map_or(0, |p| p.cols);
                let mut ports = vec![Switch];
                ports.extend(std::iter::repeat_n(Data, cols));
                ports
            }
            ActorKind::When { config } => vec![Data; config.inputs],
            ActorKind::Source { .. } | ActorKind::Const { .. } => vec![],
            ActorKind::Sink { .. } => vec![Data],
            ActorKind::Copy { token, .. } => vec![*token],
        }
    }

    /// Token kinds of the output ports, in port order.
    pub fn output_ports(&self) -> Vec<ArcKind> {
        use ArcKind::*;
        match self {
            ActorKind::Operator { .. } => vec![Data],
            ActorKind::Decider { .. } => vec![Control],
            ActorKind::TrueGate | ActorKind::FalseGate | ActorKind::Merge => vec![Data],
            ActorKind::StaticWhere { pattern } => vec![Data; pattern.rows],
            ActorKind::DynamicWhere { patterns } => vec![Data; patterns.first().map_or(0, |p| p.rows)],
            ActorKind::When { .. } => vec![Switch],
            ActorKind::Source { .. } | ActorKind::Const { .. } => vec![Data],
            ActorKind::Sink { .. } => vec![],
            ActorKind::Copy { token, fanout } => vec![*token; *fanout],
        }
    }

    /// Offset of the first data column of a where primitive.
    pub fn where_data_offset(&self) -> usize {
        match self {
            ActorKind::DynamicWhere { .. } => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub id: ActorId,
    #[serde(flatten)]
    pub kind: ActorKind,
}

impl Actor {
    pub fn new(id: u32, kind: ActorKind) -> Self {
        Self { id: ActorId(id), kind }
    }
}

/// Point-to-point arc from an output port to an input port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub src: ActorId,
    pub src_port: usize,
    pub dst: ActorId,
    pub dst_port: usize,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialToken {
    pub arc_index: usize,
    pub token: Token,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataflowGraph {
    pub actors: Vec<Actor>,
    pub arcs: Vec<Arc>,
    #[serde(default)]
    pub initial_tokens: Vec<InitialToken>,
}

impl DataflowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn actor(&self, id: ActorId) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn actor_mut(&mut self, id: ActorId) -> Option<&mut Actor> {
        self.actors.iter_mut().find(|a| a.id == id)
    }

    pub fn next_id(&self) -> u32 {
        self.actors.iter().map(|a| a.id.0 + 1).max().unwrap_or(0)
    }

    pub fn add_actor(&mut self, kind: ActorKind) -> ActorId {
        let id = ActorId(self.next_id());
        self.actors.push(Actor { id, kind });
        id
    }

    /// Adds an arc whose kind is taken from the source port.
    ///
    /// Panics if `src` is unknown or the port is out of range.
    pub fn connect(&mut self, src: ActorId, src_port: usize, dst: ActorId, dst_port: usize) -> usize {
        let kind = self.actor(src).expect("unknown source actor").kind.output_ports()[src_port];
        self.arcs.push(Arc { src, src_port, dst, dst_port, kind });
        self.arcs.len() - 1
    }

    pub fn arc_into(&self, dst: ActorId, dst_port: usize) -> Option<usize> {
        self.arcs.iter().position(|a| a.dst == dst && a.dst_port == dst_port)
    }

    pub fn arc_from(&self, src: ActorId, src_port: usize) -> Option<usize> {
        self.arcs.iter().position(|a| a.src == src && a.src_port == src_port)
    }

    /// Actors sorted by id.
    pub fn sorted_actors(&self) -> Vec<&Actor> {
        let mut v: Vec<&Actor> = self.actors.iter().collect();
        v.sort_by_key(|a| a.id);
        v
    }

    /// Structural equality that ignores the order of actors and arcs.
    pub fn equivalent(&self, other: &DataflowGraph) -> bool {
        let norm = |g: &DataflowGraph| {
            let mut actors = g.actors.clone();
            actors.sort_by_key(|a| a.id);
            let mut arcs: Vec<(Arc, Vec<Token>)> = g
                .arcs
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let toks = g.initial_tokens.iter().filter(|t| t.arc_index == i).map(|t| t.token).collect();
                    (*a, toks)
                })
                .collect();
            arcs.sort_by_key(|(a, _)| (a.dst, a.dst_port, a.src, a.src_port));
            (actors, arcs)
        };
        norm(self) == norm(other)
    }
}
