//! Token-driven execution of dataflow graphs.
//!
//! Where primitives split their data columns in two. A column whose routing
//! is the same under every pattern (all columns of a static where) forwards
//! its head token whenever one is present. The remaining columns only move
//! when a switch token arrives: for every output row the head pattern routes
//! such columns to, the first non-empty one (in column order) is consumed.
//! Columns the head pattern does not route are never consumed.

mod trace;

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frontend::Env;
use crate::graph::{validate, ActorId, ActorKind, ArcKind, DataflowGraph, Token, ValidationReport};

pub use trace::{check_firing, Trace, TraceEntry};

pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Always fire the lowest enabled actor id.
    Fifo,
    /// Pick uniformly among enabled actors.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_steps: u64,
    pub record_trace: bool,
    /// Allow non-finite data values instead of failing.
    pub diagnostics: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_steps: DEFAULT_STEP_LIMIT, record_trace: false, diagnostics: false }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("graph is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("no value supplied for source '{0}'")]
    MissingInput(String),
    #[error("step limit of {limit} exceeded; non-empty arcs: {}", describe_pending(.pending))]
    StepLimit { limit: u64, pending: Vec<(usize, usize)> },
    #[error("execution stalled before sinks {missing:?} received a value; non-empty arcs: {}", describe_pending(.pending))]
    Deadlock { missing: Vec<String>, pending: Vec<(usize, usize)> },
    #[error("actor {actor} found a {found:?} token where {expected:?} was expected")]
    TypeMismatch { actor: ActorId, expected: ArcKind, found: ArcKind },
    #[error("actor {actor} produced a non-finite value")]
    NonFinite { actor: ActorId },
    #[error("switch token {pattern} is outside the pattern table of actor {actor}")]
    BadPattern { actor: ActorId, pattern: u32 },
    #[error("actor {0} is not enabled")]
    NotEnabled(ActorId),
    #[error("unknown actor {0}")]
    UnknownActor(ActorId),
    #[error("replay diverged at step {0}")]
    ReplayMismatch(u64),
}

fn describe_pending(pending: &[(usize, usize)]) -> String {
    if pending.is_empty() {
        return "none".into();
    }
    pending.iter().map(|(a, n)| format!("arc {a} ({n})")).collect::<Vec<_>>().join(", ")
}

/// Mutable run state: one FIFO per arc plus per-actor internal state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionState {
    pub queues: Vec<VecDeque<Token>>,
    /// Membrane vector per actor index; empty for non-When actors.
    pub membranes: Vec<Vec<f64>>,
    /// Remaining one-shot emission for Source and Const actors.
    pub pending_emit: Vec<Option<f64>>,
    pub steps: u64,
    /// Last value seen by each named sink.
    pub sink_values: Vec<Option<f64>>,
}

impl ExecutionState {
    /// Non-empty arcs as `(arc index, queue length)`.
    pub fn pending(&self) -> Vec<(usize, usize)> {
        self.queues.iter().enumerate().filter(|(_, q)| !q.is_empty()).map(|(i, q)| (i, q.len())).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outputs: Env,
    pub trace: Option<Trace>,
    pub steps: u64,
    pub state: ExecutionState,
}

/// Per-column routing of a where actor: `Some(route)` when identical across
/// the whole pattern table.
#[derive(Debug, Clone)]
struct WhereInfo {
    static_route: Vec<Option<Option<usize>>>,
}

/// Immutable, indexed view of a validated graph.
#[derive(Debug)]
pub struct Engine<'g> {
    graph: &'g DataflowGraph,
    index: HashMap<ActorId, usize>,
    order: Vec<usize>,
    inputs: Vec<Vec<usize>>,
    outputs: Vec<Vec<usize>>,
    arc_dst: Vec<usize>,
    wheres: Vec<Option<WhereInfo>>,
}

impl<'g> Engine<'g> {
    pub fn new(graph: &'g DataflowGraph) -> Result<Self, EngineError> {
        let report = validate(graph);
        if !report.is_valid() {
            return Err(EngineError::Invalid(report));
        }
        let index: HashMap<ActorId, usize> = graph.actors.iter().enumerate().map(|(i, a)| (a.id, i)).collect();
        let mut order: Vec<usize> = (0..graph.actors.len()).collect();
        order.sort_by_key(|&i| graph.actors[i].id);
        let mut inputs: Vec<Vec<usize>> = graph.actors.iter().map(|a| vec![usize::MAX; a.kind.input_ports().len()]).collect();
        let mut outputs: Vec<Vec<usize>> = graph.actors.iter().map(|a| vec![usize::MAX; a.kind.output_ports().len()]).collect();
        let mut arc_dst = Vec::with_capacity(graph.arcs.len());
        for (i, arc) in graph.arcs.iter().enumerate() {
            inputs[index[&arc.dst]][arc.dst_port] = i;
            outputs[index[&arc.src]][arc.src_port] = i;
            arc_dst.push(index[&arc.dst]);
        }
        let wheres = graph
            .actors
            .iter()
            .map(|a| match &a.kind {
                ActorKind::StaticWhere { pattern } => {
                    Some(WhereInfo { static_route: (0..pattern.cols).map(|c| Some(pattern.route(c))).collect() })
                }
                ActorKind::DynamicWhere { patterns } => {
                    let cols = patterns[0].cols;
                    let static_route = (0..cols)
                        .map(|c| {
                            let r = patterns[0].route(c);
                            patterns.iter().all(|p| p.route(c) == r).then_some(r)
                        })
                        .collect();
                    Some(WhereInfo { static_route })
                }
                _ => None,
            })
            .collect();
        Ok(Self { graph, index, order, inputs, outputs, arc_dst, wheres })
    }

    pub fn graph(&self) -> &DataflowGraph {
        self.graph
    }

    /// Fresh state with sources bound to `inputs` and initial tokens placed.
    pub fn initial_state(&self, inputs: &Env, limits: &Limits) -> Result<ExecutionState, EngineError> {
        let g = self.graph;
        let mut queues = vec![VecDeque::new(); g.arcs.len()];
        for t in &g.initial_tokens {
            queues[t.arc_index].push_back(t.token);
        }
        let mut pending_emit = Vec::with_capacity(g.actors.len());
        for a in &g.actors {
            pending_emit.push(match &a.kind {
                ActorKind::Source { name } => {
                    let v = *inputs.get(name).ok_or_else(|| EngineError::MissingInput(name.clone()))?;
                    if !v.is_finite() && !limits.diagnostics {
                        return Err(EngineError::NonFinite { actor: a.id });
                    }
                    Some(v)
                }
                ActorKind::Const { value } => Some(*value),
                _ => None,
            });
        }
        let membranes = g
            .actors
            .iter()
            .map(|a| match &a.kind {
                ActorKind::When { config } => config.initial.clone(),
                _ => Vec::new(),
            })
            .collect();
        Ok(ExecutionState { queues, membranes, pending_emit, steps: 0, sink_values: vec![None; g.actors.len()] })
    }

    fn idx(&self, id: ActorId) -> Result<usize, EngineError> {
        self.index.get(&id).copied().ok_or(EngineError::UnknownActor(id))
    }

    pub fn enabled(&self, state: &ExecutionState, id: ActorId) -> bool {
        self.index.get(&id).is_some_and(|&i| self.enabled_at(state, i))
    }

    fn has(&self, state: &ExecutionState, i: usize, port: usize) -> bool {
        !state.queues[self.inputs[i][port]].is_empty()
    }

    fn head(&self, state: &ExecutionState, i: usize, port: usize) -> Option<Token> {
        state.queues[self.inputs[i][port]].front().copied()
    }

    fn enabled_at(&self, state: &ExecutionState, i: usize) -> bool {
        let kind = &self.graph.actors[i].kind;
        let n_in = self.inputs[i].len();
        match kind {
            ActorKind::Operator { .. }
            | ActorKind::Decider { .. }
            | ActorKind::When { .. }
            | ActorKind::TrueGate
            | ActorKind::FalseGate
            | ActorKind::Sink { .. }
            | ActorKind::Copy { .. } => (0..n_in).all(|p| self.has(state, i, p)),
            ActorKind::Merge => match self.head(state, i, 0) {
                Some(Token::Control(c)) => self.has(state, i, if c { 1 } else { 2 }),
                // A wrongly typed head is reported by `fire`.
                Some(_) => true,
                None => false,
            },
            ActorKind::Source { .. } | ActorKind::Const { .. } => state.pending_emit[i].is_some(),
            ActorKind::StaticWhere { .. } | ActorKind::DynamicWhere { .. } => {
                self.static_ready(state, i) || self.switch_ready(state, i).unwrap_or(true)
            }
        }
    }

    fn static_ready(&self, state: &ExecutionState, i: usize) -> bool {
        let info = self.wheres[i].as_ref().expect("where info");
        let off = self.graph.actors[i].kind.where_data_offset();
        info.static_route.iter().enumerate().any(|(c, r)| matches!(r, Some(Some(_))) && self.has(state, i, off + c))
    }

    /// `Some(ready)` for a dynamic where with a well-formed switch head;
    /// `None` when the head is malformed (so that `fire` reports it).
    fn switch_ready(&self, state: &ExecutionState, i: usize) -> Option<bool> {
        let ActorKind::DynamicWhere { patterns } = &self.graph.actors[i].kind else { return Some(false) };
        let info = self.wheres[i].as_ref().expect("where info");
        let p = match self.head(state, i, 0) {
            None => return Some(false),
            Some(Token::Switch(p)) => patterns.get(p as usize)?,
            Some(_) => return None,
        };
        Some((0..p.rows).all(|r| {
            let mut cols = (0..p.cols).filter(|&c| info.static_route[c].is_none() && p.matrix[r][c]).peekable();
            cols.peek().is_none() || cols.any(|c| self.has(state, i, 1 + c))
        }))
    }

    fn pop(&self, state: &mut ExecutionState, i: usize, port: usize, expected: ArcKind) -> Result<Token, EngineError> {
        let tok = state.queues[self.inputs[i][port]].pop_front().expect("pop from an enabled input");
        if tok.kind() != expected {
            return Err(EngineError::TypeMismatch { actor: self.graph.actors[i].id, expected, found: tok.kind() });
        }
        Ok(tok)
    }

    fn pop_data(&self, state: &mut ExecutionState, i: usize, port: usize, consumed: &mut Vec<(usize, Token)>) -> Result<f64, EngineError> {
        let tok = self.pop(state, i, port, ArcKind::Data)?;
        consumed.push((port, tok));
        let Token::Data(v) = tok else { unreachable!() };
        Ok(v)
    }

    /// Fires `id` once, returning what it consumed and produced.
    pub fn fire(&self, state: &mut ExecutionState, id: ActorId, limits: &Limits) -> Result<TraceEntry, EngineError> {
        let i = self.idx(id)?;
        if !self.enabled_at(state, i) {
            return Err(EngineError::NotEnabled(id));
        }
        self.fire_at(state, i, limits)
    }

    /// Fires a When actor and returns the switch token it emitted, if any.
    pub fn fire_when(&self, state: &mut ExecutionState, id: ActorId, limits: &Limits) -> Result<Option<Token>, EngineError> {
        let entry = self.fire(state, id, limits)?;
        Ok(entry.produced.first().map(|(_, t)| *t))
    }

    fn fire_at(&self, state: &mut ExecutionState, i: usize, limits: &Limits) -> Result<TraceEntry, EngineError> {
        let actor = &self.graph.actors[i];
        let id = actor.id;
        let mut consumed = Vec::new();
        let mut produced = Vec::new();
        let finite = |v: f64| if v.is_finite() || limits.diagnostics { Ok(v) } else { Err(EngineError::NonFinite { actor: id }) };
        match &actor.kind {
            ActorKind::Operator { arity, formula, .. } => {
                let args = (0..*arity).map(|p| self.pop_data(state, i, p, &mut consumed)).collect::<Result<Vec<_>, _>>()?;
                produced.push((0, Token::Data(finite(formula.eval(&args))?)));
            }
            ActorKind::Decider { arity, predicate, .. } => {
                let args = (0..*arity).map(|p| self.pop_data(state, i, p, &mut consumed)).collect::<Result<Vec<_>, _>>()?;
                produced.push((0, Token::Control(predicate.eval(&args))));
            }
            ActorKind::TrueGate | ActorKind::FalseGate => {
                let ctrl = self.pop(state, i, 0, ArcKind::Control)?;
                consumed.push((0, ctrl));
                let data = self.pop(state, i, 1, ArcKind::Data)?;
                consumed.push((1, data));
                let Token::Control(c) = ctrl else { unreachable!() };
                if c == matches!(actor.kind, ActorKind::TrueGate) {
                    produced.push((0, data));
                }
            }
            ActorKind::Merge => {
                let ctrl = self.pop(state, i, 0, ArcKind::Control)?;
                consumed.push((0, ctrl));
                let Token::Control(c) = ctrl else { unreachable!() };
                let side = if c { 1 } else { 2 };
                let data = self.pop(state, i, side, ArcKind::Data)?;
                consumed.push((side, data));
                produced.push((0, data));
            }
            ActorKind::StaticWhere { .. } | ActorKind::DynamicWhere { .. } => {
                self.fire_where(state, i, &mut consumed, &mut produced)?;
            }
            ActorKind::When { config } => {
                let args = (0..config.inputs).map(|p| self.pop_data(state, i, p, &mut consumed)).collect::<Result<Vec<_>, _>>()?;
                let emitted = config.step(&mut state.membranes[i], &args);
                if state.membranes[i].iter().any(|v| !v.is_finite()) {
                    return Err(EngineError::NonFinite { actor: id });
                }
                if let Some(p) = emitted {
                    produced.push((0, Token::Switch(p)));
                }
            }
            ActorKind::Source { .. } | ActorKind::Const { .. } => {
                let v = state.pending_emit[i].take().expect("enabled source");
                produced.push((0, Token::Data(v)));
            }
            ActorKind::Sink { name } => {
                let v = self.pop_data(state, i, 0, &mut consumed)?;
                if !name.starts_with('_') {
                    state.sink_values[i] = Some(v);
                }
            }
            ActorKind::Copy { token, fanout } => {
                let t = self.pop(state, i, 0, *token)?;
                consumed.push((0, t));
                produced.extend((0..*fanout).map(|p| (p, t)));
            }
        }
        for (port, tok) in &produced {
            state.queues[self.outputs[i][*port]].push_back(*tok);
        }
        state.steps += 1;
        Ok(TraceEntry { step: state.steps, actor: id, consumed, produced })
    }

    fn fire_where(
        &self,
        state: &mut ExecutionState,
        i: usize,
        consumed: &mut Vec<(usize, Token)>,
        produced: &mut Vec<(usize, Token)>,
    ) -> Result<(), EngineError> {
        let kind = &self.graph.actors[i].kind;
        let info = self.wheres[i].as_ref().expect("where info");
        let off = kind.where_data_offset();
        for (c, r) in info.static_route.iter().enumerate() {
            if let Some(Some(row)) = r {
                if self.has(state, i, off + c) {
                    let t = self.pop(state, i, off + c, ArcKind::Data)?;
                    consumed.push((off + c, t));
                    produced.push((*row, t));
                }
            }
        }
        let ActorKind::DynamicWhere { patterns } = kind else { return Ok(()) };
        match self.switch_ready(state, i) {
            Some(false) => return Ok(()),
            Some(true) => {}
            None => {
                let tok = self.head(state, i, 0).expect("switch head");
                return Err(match tok {
                    Token::Switch(p) => EngineError::BadPattern { actor: self.graph.actors[i].id, pattern: p },
                    other => EngineError::TypeMismatch { actor: self.graph.actors[i].id, expected: ArcKind::Switch, found: other.kind() },
                });
            }
        }
        let sw = self.pop(state, i, 0, ArcKind::Switch)?;
        consumed.push((0, sw));
        let Token::Switch(p) = sw else { unreachable!() };
        let pat = &patterns[p as usize];
        for r in 0..pat.rows {
            let col = (0..pat.cols).find(|&c| info.static_route[c].is_none() && pat.matrix[r][c] && self.has(state, i, 1 + c));
            if let Some(c) = col {
                let t = self.pop(state, i, 1 + c, ArcKind::Data)?;
                consumed.push((1 + c, t));
                produced.push((r, t));
            }
        }
        Ok(())
    }

    /// Runs to quiescence.
    pub fn run(&self, inputs: &Env, policy: Policy, limits: &Limits) -> Result<RunOutput, EngineError> {
        let mut state = self.initial_state(inputs, limits)?;
        let mut trace = limits.record_trace.then(Trace::default);
        let mut rng = match policy {
            Policy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            Policy::Fifo => None,
        };
        // Ready set keyed by actor id so that iteration order is by id.
        let mut ready: BTreeSet<(ActorId, usize)> = BTreeSet::new();
        for &i in &self.order {
            if self.enabled_at(&state, i) {
                ready.insert((self.graph.actors[i].id, i));
            }
        }
        while !ready.is_empty() {
            if state.steps >= limits.max_steps {
                return Err(EngineError::StepLimit { limit: limits.max_steps, pending: state.pending() });
            }
            let (_, i) = match rng.as_mut() {
                None => *ready.iter().next().expect("non-empty"),
                Some(r) => *ready.iter().nth(r.gen_range(0..ready.len())).expect("in range"),
            };
            let entry = self.fire_at(&mut state, i, limits)?;
            let mut touched = vec![i];
            touched.extend(self.outputs[i].iter().map(|&a| self.arc_dst[a]));
            for t in touched {
                let key = (self.graph.actors[t].id, t);
                if self.enabled_at(&state, t) {
                    ready.insert(key);
                } else {
                    ready.remove(&key);
                }
            }
            if let Some(tr) = trace.as_mut() {
                tr.entries.push(entry);
            }
        }
        let mut outputs = Env::new();
        let mut missing = Vec::new();
        for &i in &self.order {
            if let ActorKind::Sink { name } = &self.graph.actors[i].kind {
                if name.starts_with('_') {
                    continue;
                }
                match state.sink_values[i] {
                    Some(v) => {
                        outputs.insert(name.clone(), v);
                    }
                    None => missing.push(name.clone()),
                }
            }
        }
        if !missing.is_empty() {
            return Err(EngineError::Deadlock { missing, pending: state.pending() });
        }
        Ok(RunOutput { outputs, trace, steps: state.steps, state })
    }

    /// Re-fires every entry of `trace` from a fresh state and checks that each
    /// firing reproduces the recorded tokens.
    pub fn replay(&self, trace: &Trace, inputs: &Env, limits: &Limits) -> Result<ExecutionState, EngineError> {
        let mut state = self.initial_state(inputs, limits)?;
        for e in &trace.entries {
            let got = self.fire(&mut state, e.actor, limits).map_err(|_| EngineError::ReplayMismatch(e.step))?;
            if got != *e {
                return Err(EngineError::ReplayMismatch(e.step));
            }
        }
        Ok(state)
    }

    /// Checks every trace entry against its actor's firing rule.
    pub fn check_conservation(&self, trace: &Trace) -> Result<(), String> {
        for e in &trace.entries {
            let i = self.index.get(&e.actor).ok_or_else(|| format!("trace names unknown actor {}", e.actor))?;
            check_firing(&self.graph.actors[*i].kind, e)?;
        }
        Ok(())
    }
}

/// Validates, indexes and runs `graph` in one call.
pub fn run(graph: &DataflowGraph, inputs: &Env, policy: Policy, limits: &Limits) -> Result<RunOutput, EngineError> {
    Engine::new(graph)?.run(inputs, policy, limits)
}

#[cfg(test)]
mod tests;
