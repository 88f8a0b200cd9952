use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{ActorId, ActorKind, ArcKind, ConnectionPattern, DataflowGraph, Nonlinearity, Token, WhenConfig};

const MAX_REGION_TESTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// `None` for graph-level problems.
    pub actor: Option<ActorId>,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.actor {
            Some(id) => write!(f, "{sev}: actor {id}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Warning)
    }

    /// No errors; warnings are allowed.
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn error(&mut self, actor: Option<ActorId>, message: impl Into<String>) {
        self.0.push(Violation { actor, severity: Severity::Error, message: message.into() });
    }

    fn warn(&mut self, actor: Option<ActorId>, message: impl Into<String>) {
        self.0.push(Violation { actor, severity: Severity::Warning, message: message.into() });
    }
}

/// Checks every structural invariant of `graph`. Violations are ordered by
/// actor id, graph-level ones first.
pub fn validate(graph: &DataflowGraph) -> ValidationReport {
    let mut out = Collector(Vec::new());

    let mut by_id: HashMap<ActorId, &ActorKind> = HashMap::new();
    for actor in &graph.actors {
        if by_id.insert(actor.id, &actor.kind).is_some() {
            out.error(Some(actor.id), "duplicate actor id");
        }
    }

    for actor in &graph.actors {
        check_actor(actor.id, &actor.kind, &mut out);
    }

    let mut in_count: HashMap<(ActorId, usize), usize> = HashMap::new();
    let mut out_count: HashMap<(ActorId, usize), usize> = HashMap::new();
    for (idx, arc) in graph.arcs.iter().enumerate() {
        let (Some(src), Some(dst)) = (by_id.get(&arc.src), by_id.get(&arc.dst)) else {
            let missing = if by_id.contains_key(&arc.src) { arc.dst } else { arc.src };
            out.error(None, format!("arc {idx} references unknown actor {missing}"));
            continue;
        };
        let src_ports = src.output_ports();
        let dst_ports = dst.input_ports();
        match src_ports.get(arc.src_port) {
            None => out.error(Some(arc.src), format!("arc {idx} leaves nonexistent output port {}", arc.src_port)),
            Some(k) if *k != arc.kind => out.error(
                Some(arc.src),
                format!("arc {idx} kind {} does not match output port {} kind {k}", arc.kind, arc.src_port),
            ),
            Some(_) => {}
        }
        match dst_ports.get(arc.dst_port) {
            None => out.error(Some(arc.dst), format!("arc {idx} enters nonexistent input port {}", arc.dst_port)),
            Some(k) if *k != arc.kind => out.error(
                Some(arc.dst),
                format!("arc {idx} kind {} does not match input port {} kind {k}", arc.kind, arc.dst_port),
            ),
            Some(_) => {}
        }
        *in_count.entry((arc.dst, arc.dst_port)).or_default() += 1;
        *out_count.entry((arc.src, arc.src_port)).or_default() += 1;
    }

    for actor in &graph.actors {
        for port in 0..actor.kind.input_ports().len() {
            match in_count.get(&(actor.id, port)).copied().unwrap_or(0) {
                0 => out.error(Some(actor.id), format!("missing arc on port {port}")),
                1 => {}
                n => out.error(Some(actor.id), format!("{n} arcs enter input port {port}")),
            }
        }
        for port in 0..actor.kind.output_ports().len() {
            match out_count.get(&(actor.id, port)).copied().unwrap_or(0) {
                0 => out.error(Some(actor.id), format!("dangling output port {port}")),
                1 => {}
                n => out.error(Some(actor.id), format!("output port {port} fans out to {n} arcs without a Copy")),
            }
        }
    }

    // Switch tokens a when can emit must exist in the pattern table it drives.
    for actor in &graph.actors {
        if let ActorKind::When { config } = &actor.kind {
            for target in switch_targets(graph, actor.id) {
                if let Some(ActorKind::DynamicWhere { patterns }) = by_id.get(&target) {
                    for id in config.emitted_patterns() {
                        if id as usize >= patterns.len() {
                            out.error(
                                Some(actor.id),
                                format!("emits pattern {id} but dynamic where {target} has {} patterns", patterns.len()),
                            );
                        }
                    }
                }
            }
        }
    }

    for (i, tok) in graph.initial_tokens.iter().enumerate() {
        let Some(arc) = graph.arcs.get(tok.arc_index) else {
            out.error(None, format!("initial token {i} on nonexistent arc {}", tok.arc_index));
            continue;
        };
        if tok.token.kind() != arc.kind {
            out.error(Some(arc.dst), format!("initial {} token on {} arc {}", tok.token.kind(), arc.kind, tok.arc_index));
        }
        match tok.token {
            Token::Data(v) if !v.is_finite() => out.error(Some(arc.dst), "non-finite initial data token"),
            Token::Switch(p) => {
                if let Some(ActorKind::DynamicWhere { patterns }) = by_id.get(&arc.dst) {
                    if p as usize >= patterns.len() {
                        out.error(Some(arc.dst), format!("initial switch token selects missing pattern {p}"));
                    }
                }
            }
            _ => {}
        }
    }

    let mut violations = out.0;
    violations.sort_by_key(|v| v.actor.map(|a| a.0 as i64).unwrap_or(-1));
    ValidationReport { violations }
}

/// Dynamic wheres reached from `when`'s switch output, following Copy actors.
fn switch_targets(graph: &DataflowGraph, when: ActorId) -> Vec<ActorId> {
    let mut targets = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = vec![when];
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        for arc in graph.arcs.iter().filter(|a| a.src == id && a.kind == ArcKind::Switch) {
            match graph.actor(arc.dst).map(|a| &a.kind) {
                Some(ActorKind::Copy { .. }) => stack.push(arc.dst),
                Some(_) => targets.push(arc.dst),
                None => {}
            }
        }
    }
    targets
}

fn check_pattern(id: ActorId, p: &ConnectionPattern, out: &mut Collector) {
    if p.rows == 0 || p.cols == 0 {
        out.error(Some(id), format!("pattern shape {}x{} must be at least 1x1", p.rows, p.cols));
    }
    if !p.is_well_shaped() {
        out.error(Some(id), format!("pattern matrix does not have declared shape {}x{}", p.rows, p.cols));
        return;
    }
    for col in 0..p.cols {
        match p.column_count(col) {
            0 => out.warn(Some(id), format!("pattern column {col} routes nowhere")),
            1 => {}
            n => out.error(Some(id), format!("pattern column {col} routes to {n} outputs")),
        }
    }
}

fn check_when(id: ActorId, c: &WhenConfig, out: &mut Collector) {
    if c.k == 0 {
        out.error(Some(id), "when membrane dimension must be >= 1");
    }
    if c.inputs == 0 {
        out.error(Some(id), "when needs at least one input");
    }
    if c.weights.len() != c.inputs || c.weights.iter().any(|r| r.len() != c.k) {
        out.error(Some(id), format!("weight matrix shape must be {}x{}", c.inputs, c.k));
    }
    if c.weights.iter().flatten().any(|w| !w.is_finite()) {
        out.error(Some(id), "non-finite weight");
    }
    if c.initial.len() != c.k {
        out.error(Some(id), format!("initial membrane has length {} but k = {}", c.initial.len(), c.k));
    }
    if c.regions.is_empty() {
        out.error(Some(id), "when has no regions");
    }
    for (r, region) in c.regions.iter().enumerate() {
        if region.tests.len() > MAX_REGION_TESTS {
            out.error(Some(id), format!("region {r} has {} tests (max {MAX_REGION_TESTS})", region.tests.len()));
        }
        if region.tests.iter().any(|t| t.normal.len() != c.k) {
            out.error(Some(id), format!("region {r} test normal length differs from k"));
        }
        if let Some(anchor) = &region.anchor {
            if anchor.len() != c.k {
                out.error(Some(id), format!("region {r} anchor length differs from k"));
            }
        }
    }
    match c.nonlinearity {
        Nonlinearity::Leak { lambda } if !(lambda > 0.0 && lambda <= 1.0) => {
            out.error(Some(id), format!("leak factor {lambda} outside (0, 1]"))
        }
        Nonlinearity::Clamp { lo, hi } if !(lo <= hi) => out.error(Some(id), format!("clamp bounds {lo} > {hi}")),
        _ => {}
    }
}

fn check_actor(id: ActorId, kind: &ActorKind, out: &mut Collector) {
    match kind {
        ActorKind::Operator { arity, formula, .. } => {
            if formula.min_arity() > *arity {
                out.error(Some(id), format!("formula reads input {} but arity is {arity}", formula.min_arity() - 1));
            }
            if formula.has_nonfinite_const() {
                out.error(Some(id), "formula contains a non-finite constant");
            }
        }
        ActorKind::Decider { arity, predicate, .. } => {
            if predicate.min_arity() > *arity {
                out.error(Some(id), format!("predicate reads input {} but arity is {arity}", predicate.min_arity() - 1));
            }
        }
        ActorKind::StaticWhere { pattern } => check_pattern(id, pattern, out),
        ActorKind::DynamicWhere { patterns } => {
            if patterns.is_empty() {
                out.error(Some(id), "dynamic where has an empty pattern table");
            }
            if let Some(first) = patterns.first() {
                for (i, p) in patterns.iter().enumerate() {
                    if p.shape() != first.shape() {
                        out.error(
                            Some(id),
                            format!(
                                "pattern {i} shape {}x{} differs from pattern 0 shape {}x{}",
                                p.rows, p.cols, first.rows, first.cols
                            ),
                        );
                    }
                    check_pattern(id, p, out);
                }
            }
        }
        ActorKind::When { config } => check_when(id, config, out),
        ActorKind::Const { value } if !value.is_finite() => out.error(Some(id), "non-finite constant"),
        ActorKind::Copy { fanout, .. } if *fanout == 0 => out.error(Some(id), "copy needs at least one output"),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Actor, ArcKind};

    fn const_sink() -> DataflowGraph {
        let mut g = DataflowGraph::new();
        let c = g.add_actor(ActorKind::Const { value: 1.0 });
        let s = g.add_actor(ActorKind::Sink { name: "y".into() });
        g.connect(c, 0, s, 0);
        g
    }

    #[test]
    fn minimal_graph_is_clean() {
        assert!(validate(&const_sink()).is_empty());
    }

    #[test]
    fn merge_missing_input() {
        let mut g = DataflowGraph::new();
        let ctl = g.add_actor(ActorKind::Const { value: 0.0 });
        let d = g.add_actor(ActorKind::Const { value: 1.0 });
        let cmp = g.add_actor(ActorKind::Decider {
            name: "lt".into(),
            arity: 1,
            predicate: crate::graph::Predicate::Bool(true),
        });
        let m = g.add_actor(ActorKind::Merge);
        let s = g.add_actor(ActorKind::Sink { name: "y".into() });
        g.connect(ctl, 0, cmp, 0);
        g.connect(cmp, 0, m, 0);
        g.connect(d, 0, m, 1);
        g.connect(m, 0, s, 0);
        let report = validate(&g);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert!(report.violations[0].message.contains("missing arc on port"));
        assert_eq!(report.violations[0].actor, Some(m));
    }

    #[test]
    fn mixed_pattern_shapes_rejected() {
        let mut g = DataflowGraph::new();
        g.actors.push(Actor::new(
            0,
            ActorKind::DynamicWhere {
                patterns: vec![ConnectionPattern::identity(2), ConnectionPattern::from_routes(3, &[Some(0), Some(2)])],
            },
        ));
        let report = validate(&g);
        assert!(report.errors().any(|v| v.message.contains("shape 3x2 differs")), "{report}");
    }

    #[test]
    fn zero_column_is_only_a_warning() {
        let mut g = DataflowGraph::new();
        let a = g.add_actor(ActorKind::Const { value: 1.0 });
        let b = g.add_actor(ActorKind::Const { value: 2.0 });
        let w = g.add_actor(ActorKind::StaticWhere { pattern: ConnectionPattern::from_routes(1, &[Some(0), None]) });
        let s = g.add_actor(ActorKind::Sink { name: "y".into() });
        g.connect(a, 0, w, 0);
        g.connect(b, 0, w, 1);
        g.connect(w, 0, s, 0);
        let report = validate(&g);
        assert!(report.is_valid());
        assert_eq!(report.warnings().count(), 1);
    }

    #[test]
    fn column_routing_twice_is_error() {
        let p = ConnectionPattern::new(vec![vec![true], vec![true]]);
        let mut out = Collector(Vec::new());
        check_pattern(ActorId(0), &p, &mut out);
        assert_eq!(out.0.len(), 1);
        assert_eq!(out.0[0].severity, Severity::Error);
    }

    #[test]
    fn kind_mismatch_and_fanout() {
        let mut g = const_sink();
        let extra = g.add_actor(ActorKind::Sink { name: "z".into() });
        g.arcs.push(crate::graph::Arc { src: ActorId(0), src_port: 0, dst: extra, dst_port: 0, kind: ArcKind::Control });
        let report = validate(&g);
        assert!(report.errors().any(|v| v.message.contains("does not match")));
        assert!(report.errors().any(|v| v.message.contains("fans out")));
    }

    #[test]
    fn when_weight_shape_checked() {
        let mut cfg = WhenConfig::quadrants();
        cfg.weights.pop();
        let mut out = Collector(Vec::new());
        check_when(ActorId(3), &cfg, &mut out);
        assert!(out.0.iter().any(|v| v.message.contains("weight matrix shape must be 2x2")));
    }

    #[test]
    fn ordering_is_by_actor_id() {
        let mut g = DataflowGraph::new();
        g.actors.push(Actor::new(5, ActorKind::Sink { name: "a".into() }));
        g.actors.push(Actor::new(2, ActorKind::Sink { name: "b".into() }));
        let ids: Vec<_> = validate(&g).violations.iter().map(|v| v.actor.unwrap().0).collect();
        assert_eq!(ids, vec![2, 5]);
    }
}
