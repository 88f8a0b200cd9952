use super::*;
use crate::graph::{ConnectionPattern, Formula, HalfSpace, Nonlinearity, Predicate, Region, ResetRule, WhenConfig};

fn catch_all_when() -> WhenConfig {
    WhenConfig {
        k: 1,
        inputs: 1,
        weights: vec![vec![1.0]],
        nonlinearity: Nonlinearity::Identity,
        regions: vec![Region { tests: vec![], pattern: 0, anchor: None }],
        reset: ResetRule::ToZero,
        initial: vec![0.0],
        label: None,
    }
}

/// Wraps one actor under test with feeders on every input and sinks on every
/// output. Tests then push tokens straight onto the actor's input arcs.
fn harness(kind: ActorKind) -> (DataflowGraph, ActorId) {
    let mut g = DataflowGraph::new();
    let ins = kind.input_ports();
    let outs = kind.output_ports().len();
    let dut = g.add_actor(kind);
    for (p, k) in ins.into_iter().enumerate() {
        let src = g.add_actor(ActorKind::Source { name: format!("in{p}") });
        let feeder = match k {
            ArcKind::Data => src,
            ArcKind::Control => {
                let d = g.add_actor(ActorKind::Decider { name: "t".into(), arity: 1, predicate: Predicate::Bool(true) });
                g.connect(src, 0, d, 0);
                d
            }
            ArcKind::Switch => {
                let w = g.add_actor(ActorKind::When { config: catch_all_when() });
                g.connect(src, 0, w, 0);
                w
            }
        };
        g.connect(feeder, 0, dut, p);
    }
    for p in 0..outs {
        let s = g.add_actor(ActorKind::Sink { name: format!("out{p}") });
        g.connect(dut, p, s, 0);
    }
    (g, dut)
}

fn push(g: &DataflowGraph, st: &mut ExecutionState, dut: ActorId, port: usize, t: Token) {
    st.queues[g.arc_into(dut, port).unwrap()].push_back(t);
}

fn out(g: &DataflowGraph, st: &ExecutionState, dut: ActorId, port: usize) -> Vec<Token> {
    st.queues[g.arc_from(dut, port).unwrap()].iter().copied().collect()
}

fn fresh(g: &DataflowGraph) -> ExecutionState {
    let e = Engine::new(g).unwrap();
    let inputs: Env = g
        .actors
        .iter()
        .filter_map(|a| match &a.kind {
            ActorKind::Source { name } => Some((name.clone(), 0.0)),
            _ => None,
        })
        .collect();
    e.initial_state(&inputs, &Limits::default()).unwrap()
}

#[test]
fn merge_true_side_enables() {
    let (g, m) = harness(ActorKind::Merge);
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, m, 0, Token::Control(true));
    assert!(!e.enabled(&st, m));
    push(&g, &mut st, m, 1, Token::Data(7.0));
    assert!(e.enabled(&st, m));
    e.fire(&mut st, m, &Limits::default()).unwrap();
    assert_eq!(out(&g, &st, m, 0), vec![Token::Data(7.0)]);
}

#[test]
fn true_gate_needs_control() {
    let (g, t) = harness(ActorKind::TrueGate);
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, t, 1, Token::Data(1.0));
    assert!(!e.enabled(&st, t));
    assert_eq!(e.fire(&mut st, t, &Limits::default()), Err(EngineError::NotEnabled(t)));
}

#[test]
fn gates_pass_and_drop() {
    let (g, f) = harness(ActorKind::FalseGate);
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, f, 0, Token::Control(false));
    push(&g, &mut st, f, 1, Token::Data(42.0));
    e.fire(&mut st, f, &Limits::default()).unwrap();
    assert_eq!(out(&g, &st, f, 0), vec![Token::Data(42.0)]);
    push(&g, &mut st, f, 0, Token::Control(true));
    push(&g, &mut st, f, 1, Token::Data(1.0));
    let entry = e.fire(&mut st, f, &Limits::default()).unwrap();
    assert!(entry.produced.is_empty());
    assert_eq!(out(&g, &st, f, 0).len(), 1);
    assert!(st.queues[g.arc_into(f, 1).unwrap()].is_empty());
}

fn swap_where() -> ActorKind {
    ActorKind::DynamicWhere {
        patterns: vec![
            ConnectionPattern::from_routes(2, &[Some(0), None]),
            ConnectionPattern::new(vec![vec![false, true], vec![true, false]]),
        ],
    }
}

#[test]
fn dynamic_where_partial_route_enables() {
    let (g, w) = harness(swap_where());
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 0, Token::Switch(0));
    assert!(!e.enabled(&st, w));
    push(&g, &mut st, w, 1, Token::Data(5.0));
    assert!(e.enabled(&st, w));
    e.fire(&mut st, w, &Limits::default()).unwrap();
    assert_eq!(out(&g, &st, w, 0), vec![Token::Data(5.0)]);
}

#[test]
fn dynamic_where_swap() {
    let (g, w) = harness(swap_where());
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 0, Token::Switch(1));
    push(&g, &mut st, w, 1, Token::Data(1.0));
    assert!(!e.enabled(&st, w));
    push(&g, &mut st, w, 2, Token::Data(2.0));
    e.fire(&mut st, w, &Limits::default()).unwrap();
    assert_eq!(out(&g, &st, w, 0), vec![Token::Data(2.0)]);
    assert_eq!(out(&g, &st, w, 1), vec![Token::Data(1.0)]);
}

#[test]
fn unrouted_column_is_left_in_place() {
    let (g, w) = harness(swap_where());
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 0, Token::Switch(0));
    push(&g, &mut st, w, 1, Token::Data(1.0));
    push(&g, &mut st, w, 2, Token::Data(2.0));
    e.fire(&mut st, w, &Limits::default()).unwrap();
    assert_eq!(st.queues[g.arc_into(w, 2).unwrap()].len(), 1);
}

#[test]
fn static_where_identity() {
    let (g, w) = harness(ActorKind::StaticWhere { pattern: ConnectionPattern::identity(2) });
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 0, Token::Data(3.0));
    push(&g, &mut st, w, 1, Token::Data(4.0));
    e.fire(&mut st, w, &Limits::default()).unwrap();
    assert_eq!(out(&g, &st, w, 0), vec![Token::Data(3.0)]);
    assert_eq!(out(&g, &st, w, 1), vec![Token::Data(4.0)]);
}

#[test]
fn static_where_merges_rows() {
    // Two columns feeding one row: whichever arrives is forwarded.
    let (g, w) = harness(ActorKind::StaticWhere { pattern: ConnectionPattern::new(vec![vec![true, true]]) });
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 1, Token::Data(9.0));
    assert!(e.enabled(&st, w));
    e.fire(&mut st, w, &Limits::default()).unwrap();
    assert_eq!(out(&g, &st, w, 0), vec![Token::Data(9.0)]);
}

fn lif_3x_minus_2_lt_y() -> WhenConfig {
    WhenConfig {
        k: 1,
        inputs: 2,
        weights: vec![vec![-3.0], vec![1.0]],
        nonlinearity: Nonlinearity::Identity,
        regions: vec![
            Region { tests: vec![HalfSpace { normal: vec![1.0], offset: -2.0, strict: true }], pattern: 0, anchor: None },
            Region { tests: vec![], pattern: 1, anchor: None },
        ],
        reset: ResetRule::ToZero,
        initial: vec![0.0],
        label: None,
    }
}

fn when_harness(cfg: WhenConfig) -> (DataflowGraph, ActorId) {
    let mut g = DataflowGraph::new();
    let n = cfg.inputs;
    let patterns = (0..4).map(|_| ConnectionPattern::identity(1)).collect();
    let w = g.add_actor(ActorKind::When { config: cfg });
    for p in 0..n {
        let s = g.add_actor(ActorKind::Source { name: format!("in{p}") });
        g.connect(s, 0, w, p);
    }
    let dw = g.add_actor(ActorKind::DynamicWhere { patterns });
    g.connect(w, 0, dw, 0);
    let s = g.add_actor(ActorKind::Source { name: "d".into() });
    g.connect(s, 0, dw, 1);
    let k = g.add_actor(ActorKind::Sink { name: "out".into() });
    g.connect(dw, 0, k, 0);
    (g, w)
}

#[test]
fn lif_predicate_fires_true_pattern() {
    let (g, w) = when_harness(lif_3x_minus_2_lt_y());
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 0, Token::Data(1.0));
    push(&g, &mut st, w, 1, Token::Data(2.0));
    assert_eq!(e.fire_when(&mut st, w, &Limits::default()).unwrap(), Some(Token::Switch(0)));
    // At equality 3x - 2 = y the strict test fails.
    push(&g, &mut st, w, 0, Token::Data(1.0));
    push(&g, &mut st, w, 1, Token::Data(1.0));
    assert_eq!(e.fire_when(&mut st, w, &Limits::default()).unwrap(), Some(Token::Switch(1)));
}

#[test]
fn quadrant_when_emits_quadrant_four() {
    let (g, w) = when_harness(WhenConfig::quadrants());
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 0, Token::Data(3.0));
    push(&g, &mut st, w, 1, Token::Data(-1.0));
    assert_eq!(e.fire_when(&mut st, w, &Limits::default()).unwrap(), Some(Token::Switch(3)));
    assert_eq!(st.membranes[g.actors.iter().position(|a| a.id == w).unwrap()], vec![3.0, -1.0]);
}

#[test]
fn sub_threshold_keeps_membrane() {
    let mut cfg = WhenConfig::quadrants();
    cfg.regions.truncate(1);
    let (g, w) = when_harness(cfg);
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    push(&g, &mut st, w, 0, Token::Data(-1.0));
    push(&g, &mut st, w, 1, Token::Data(-1.0));
    assert_eq!(e.fire_when(&mut st, w, &Limits::default()).unwrap(), None);
    push(&g, &mut st, w, 0, Token::Data(2.0));
    push(&g, &mut st, w, 1, Token::Data(2.0));
    assert_eq!(e.fire_when(&mut st, w, &Limits::default()).unwrap(), Some(Token::Switch(0)));
}

#[test]
fn reset_to_zero_is_memoryless() {
    let (g, w) = when_harness(lif_3x_minus_2_lt_y());
    let e = Engine::new(&g).unwrap();
    let mut st = fresh(&g);
    let mut first = Vec::new();
    for round in 0..2 {
        for (x, y) in [(1.0, 2.0), (5.0, 0.0), (0.0, -1.9), (-4.0, -20.0)] {
            push(&g, &mut st, w, 0, Token::Data(x));
            push(&g, &mut st, w, 1, Token::Data(y));
            let t = e.fire_when(&mut st, w, &Limits::default()).unwrap();
            if round == 0 {
                first.push(t);
            } else {
                assert_eq!(first.remove(0), t);
            }
        }
    }
}

/// x -> Operator(2x) -> Sink y, plus a diverging loop of its own.
fn doubler() -> DataflowGraph {
    let mut g = DataflowGraph::new();
    let x = g.add_actor(ActorKind::Source { name: "x".into() });
    let op = g.add_actor(ActorKind::Operator {
        name: "2x".into(),
        arity: 1,
        formula: Formula::Mul(Box::new(Formula::Const(2.0)), Box::new(Formula::Input(0))),
    });
    let y = g.add_actor(ActorKind::Sink { name: "y".into() });
    g.connect(x, 0, op, 0);
    g.connect(op, 0, y, 0);
    g
}

#[test]
fn run_collects_sinks_and_traces() {
    let g = doubler();
    let inputs: Env = [("x".to_string(), 21.0)].into_iter().collect();
    let limits = Limits { record_trace: true, ..Limits::default() };
    let out = run(&g, &inputs, Policy::Fifo, &limits).unwrap();
    assert_eq!(out.outputs["y"], 42.0);
    assert_eq!(out.steps, 3);
    let trace = out.trace.unwrap();
    assert_eq!(trace.to_string().lines().next().unwrap(), "1 0 consumed=[] produced=[0:d:21]");
    let e = Engine::new(&g).unwrap();
    e.check_conservation(&trace).unwrap();
    assert_eq!(e.replay(&trace, &inputs, &limits).unwrap(), out.state);
}

#[test]
fn missing_input_and_step_limit() {
    let g = doubler();
    assert_eq!(run(&g, &Env::new(), Policy::Fifo, &Limits::default()).unwrap_err(), EngineError::MissingInput("x".into()));
    let inputs: Env = [("x".to_string(), 1.0)].into_iter().collect();
    let limits = Limits { max_steps: 2, ..Limits::default() };
    assert!(matches!(run(&g, &inputs, Policy::Fifo, &limits), Err(EngineError::StepLimit { limit: 2, .. })));
}

#[test]
fn non_finite_result_is_an_error() {
    let mut g = doubler();
    if let ActorKind::Operator { formula, .. } = &mut g.actors[1].kind {
        *formula = Formula::Div(Box::new(Formula::Const(1.0)), Box::new(Formula::Input(0)));
    }
    let inputs: Env = [("x".to_string(), 0.0)].into_iter().collect();
    assert!(matches!(run(&g, &inputs, Policy::Fifo, &Limits::default()), Err(EngineError::NonFinite { .. })));
    let diag = Limits { diagnostics: true, ..Limits::default() };
    assert!(run(&g, &inputs, Policy::Fifo, &diag).unwrap().outputs["y"].is_infinite());
}

#[test]
fn stalled_sink_is_a_deadlock() {
    let (g, _) = harness(ActorKind::Merge);
    let inputs: Env = ["in0", "in1", "in2"].iter().map(|n| (n.to_string(), 1.0)).collect();
    // The decider emits `true`, the true side has a token: the merge fires.
    assert_eq!(run(&g, &inputs, Policy::Fifo, &Limits::default()).unwrap().outputs["out0"], 1.0);
    let (g, _) = harness(ActorKind::TrueGate);
    let mut g = g;
    if let ActorKind::Decider { predicate, .. } = &mut g.actors[2].kind {
        *predicate = Predicate::Bool(false);
    }
    let inputs: Env = ["in0", "in1"].iter().map(|n| (n.to_string(), 1.0)).collect();
    assert!(matches!(run(&g, &inputs, Policy::Fifo, &Limits::default()), Err(EngineError::Deadlock { .. })));
}
