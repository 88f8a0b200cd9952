use super::*;
use crate::engine::{run, Limits, Policy};
use crate::frontend::{parse, Env, CANONICAL_PROGRAM};
use crate::graph::{validate, Formula, Nonlinearity, Region, ResetRule, WhenConfig};
use crate::lower::lower_ndf;

fn env(pairs: &[(&str, f64)]) -> Env {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn swap() -> ConnectionPattern {
    ConnectionPattern::new(vec![vec![false, true], vec![true, false]])
}

/// Sources s0..s(n-1) -> chain of static wheres -> sinks o0..o(n-1).
fn static_chain(patterns: &[ConnectionPattern]) -> (DataflowGraph, Vec<ActorId>) {
    let mut g = DataflowGraph::new();
    let n = patterns[0].cols;
    let srcs: Vec<ActorId> = (0..n).map(|i| g.add_actor(ActorKind::Source { name: format!("s{i}") })).collect();
    let mut prev: Vec<(ActorId, usize)> = srcs.iter().map(|s| (*s, 0)).collect();
    let mut ids = Vec::new();
    for p in patterns {
        let w = g.add_actor(ActorKind::StaticWhere { pattern: p.clone() });
        for (i, (src, port)) in prev.iter().enumerate() {
            g.connect(*src, *port, w, i);
        }
        prev = (0..p.rows).map(|r| (w, r)).collect();
        ids.push(w);
    }
    for (i, (src, port)) in prev.iter().enumerate() {
        let k = g.add_actor(ActorKind::Sink { name: format!("o{i}") });
        g.connect(*src, *port, k, 0);
    }
    (g, ids)
}

fn pattern_of(g: &DataflowGraph, id: ActorId) -> ConnectionPattern {
    match &g.actor(id).unwrap().kind {
        ActorKind::StaticWhere { pattern } => pattern.clone(),
        other => panic!("not static: {other:?}"),
    }
}

#[test]
fn identity_after_identity() {
    let (g, ids) = static_chain(&[ConnectionPattern::identity(2), ConnectionPattern::identity(2)]);
    let f = fuse_where(&g, ids[0], ids[1]).unwrap();
    assert!(validate(&f).is_valid(), "{}", validate(&f));
    assert_eq!(f.actors.len(), g.actors.len() - 1);
    assert_eq!(pattern_of(&f, ids[0]), ConnectionPattern::identity(2));
}

#[test]
fn swap_after_swap_is_identity() {
    let (g, ids) = static_chain(&[swap(), swap()]);
    let f = fuse_where(&g, ids[0], ids[1]).unwrap();
    assert_eq!(pattern_of(&f, ids[0]), ConnectionPattern::identity(2));
    let inputs = env(&[("s0", 1.0), ("s1", 2.0)]);
    let out = run(&f, &inputs, Policy::Fifo, &Limits::default()).unwrap().outputs;
    assert_eq!(out, env(&[("o0", 1.0), ("o1", 2.0)]));
}

#[test]
fn triple_chain_auto_fuses_to_product() {
    let p1 = ConnectionPattern::from_routes(3, &[Some(2), Some(0), Some(1)]);
    let p2 = ConnectionPattern::from_routes(3, &[Some(1), Some(1), Some(0)]);
    let p3 = ConnectionPattern::from_routes(3, &[Some(0), Some(2), None]);
    let (g, ids) = static_chain(&[p1.clone(), p2.clone(), p3.clone()]);
    let f = auto_fuse(&g, 100);
    let wheres: Vec<_> = f.actors.iter().filter(|a| a.kind.is_where()).collect();
    assert_eq!(wheres.len(), 1);
    assert_eq!(pattern_of(&f, ids[0]), bool_product(&p3, &bool_product(&p2, &p1)));
    assert!(validate(&f).is_valid());
    // Below any pair's port count nothing changes.
    assert_eq!(auto_fuse(&g, 1), g);
}

#[test]
fn partial_adjacency_passes_unfed_inputs_through() {
    // a: 2 -> 2 identity; only a's row 1 feeds b's column 0; b's column 1 is external.
    let mut g = DataflowGraph::new();
    let s: Vec<ActorId> = (0..3).map(|i| g.add_actor(ActorKind::Source { name: format!("s{i}") })).collect();
    let a = g.add_actor(ActorKind::StaticWhere { pattern: ConnectionPattern::identity(2) });
    let b = g.add_actor(ActorKind::StaticWhere { pattern: swap() });
    g.connect(s[0], 0, a, 0);
    g.connect(s[1], 0, a, 1);
    g.connect(s[2], 0, b, 1);
    g.connect(a, 1, b, 0);
    for (i, (src, port)) in [(a, 0), (b, 0), (b, 1)].into_iter().enumerate() {
        let k = g.add_actor(ActorKind::Sink { name: format!("o{i}") });
        g.connect(src, port, k, 0);
    }
    let f = fuse_where(&g, a, b).unwrap();
    assert!(validate(&f).is_valid(), "{}", validate(&f));
    // Columns (a0, a1, b1); rows (a0, b0, b1).
    let want = ConnectionPattern::new(vec![vec![true, false, false], vec![false, false, true], vec![false, true, false]]);
    assert_eq!(pattern_of(&f, a), want);
    let inputs = env(&[("s0", 1.0), ("s1", 2.0), ("s2", 3.0)]);
    let before = run(&g, &inputs, Policy::Fifo, &Limits::default()).unwrap().outputs;
    let after = run(&f, &inputs, Policy::Fifo, &Limits::default()).unwrap().outputs;
    assert_eq!(before, after);
}

#[test]
fn canonical_head_into_loop_where() {
    let g = lower_ndf(&parse(CANONICAL_PROGRAM).unwrap());
    let head = g.actors.iter().find(|a| matches!(a.kind, ActorKind::StaticWhere { .. })).unwrap().id;
    let dw = g
        .arcs
        .iter()
        .find(|x| x.src == head && matches!(g.actor(x.dst).unwrap().kind, ActorKind::DynamicWhere { .. }))
        .unwrap()
        .dst;
    let f = fuse_where(&g, head, dw).unwrap();
    assert!(validate(&f).is_valid(), "{}", validate(&f));
    assert_eq!(f.actors.len(), g.actors.len() - 1);
    let mut rng_state = 12345u64;
    for _ in 0..100 {
        // Small LCG keeps the inputs reproducible without extra plumbing.
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let x = ((rng_state >> 33) % 21) as f64 - 10.0;
        let y = ((rng_state >> 13) % 21) as f64 - 10.0;
        let inputs = env(&[("x", x), ("y", y)]);
        // Non-positive y with positive x diverges in both graphs.
        let before = run(&g, &inputs, Policy::Fifo, &Limits::default()).map(|o| o.outputs);
        let after = run(&f, &inputs, Policy::Fifo, &Limits::default()).map(|o| o.outputs);
        match (before, after) {
            (Ok(b), Ok(a)) => assert_eq!(b, a, "x={x} y={y}"),
            (b, a) => assert!(b.is_err() && a.is_err(), "x={x} y={y}"),
        }
    }
}

fn two_region_when() -> WhenConfig {
    use crate::graph::HalfSpace;
    WhenConfig {
        k: 1,
        inputs: 1,
        weights: vec![vec![1.0]],
        nonlinearity: Nonlinearity::Identity,
        regions: vec![
            Region { tests: vec![HalfSpace { normal: vec![1.0], offset: 0.0, strict: true }], pattern: 1, anchor: None },
            Region { tests: vec![], pattern: 0, anchor: None },
        ],
        reset: ResetRule::ToZero,
        initial: vec![0.0],
        label: None,
    }
}

/// When(k) drives two chained dynamic wheres, either through one copy or
/// through two separate whens.
fn dyn_chain(shared: bool) -> (DataflowGraph, ActorId, ActorId) {
    let mut g = DataflowGraph::new();
    let k = g.add_actor(ActorKind::Source { name: "k".into() });
    let table = vec![ConnectionPattern::identity(2), swap()];
    let d1 = g.add_actor(ActorKind::DynamicWhere { patterns: table.clone() });
    let d2 = g.add_actor(ActorKind::DynamicWhere { patterns: table });
    if shared {
        let w = g.add_actor(ActorKind::When { config: two_region_when() });
        g.connect(k, 0, w, 0);
        let c = g.add_actor(ActorKind::Copy { token: crate::graph::ArcKind::Switch, fanout: 2 });
        g.connect(w, 0, c, 0);
        g.connect(c, 0, d1, 0);
        g.connect(c, 1, d2, 0);
    } else {
        let kc = g.add_actor(ActorKind::Copy { token: crate::graph::ArcKind::Data, fanout: 2 });
        g.connect(k, 0, kc, 0);
        for (port, d) in [(0, d1), (1, d2)] {
            let w = g.add_actor(ActorKind::When { config: two_region_when() });
            g.connect(kc, port, w, 0);
            g.connect(w, 0, d, 0);
        }
    }
    for i in 0..2 {
        let s = g.add_actor(ActorKind::Source { name: format!("s{i}") });
        g.connect(s, 0, d1, 1 + i);
        g.connect(d1, i, d2, 1 + i);
        let o = g.add_actor(ActorKind::Sink { name: format!("o{i}") });
        g.connect(d2, i, o, 0);
    }
    (g, d1, d2)
}

#[test]
fn dynamic_pair_with_shared_driver() {
    let (g, d1, d2) = dyn_chain(true);
    assert!(validate(&g).is_valid(), "{}", validate(&g));
    let f = fuse_where(&g, d1, d2).unwrap();
    assert!(validate(&f).is_valid(), "{}", validate(&f));
    assert_eq!(f.actors.len(), g.actors.len() - 1);
    let ActorKind::DynamicWhere { patterns } = &f.actor(d1).unwrap().kind else { panic!() };
    assert_eq!(patterns, &vec![ConnectionPattern::identity(2); 2]);
    for k in [-1.0, 1.0] {
        let inputs = env(&[("k", k), ("s0", 5.0), ("s1", 6.0)]);
        let before = run(&g, &inputs, Policy::Fifo, &Limits::default()).unwrap().outputs;
        let after = run(&f, &inputs, Policy::Fifo, &Limits::default()).unwrap().outputs;
        assert_eq!(before, after);
    }
}

#[test]
fn rejected_pairs() {
    let (g, d1, d2) = dyn_chain(false);
    assert_eq!(fuse_where(&g, d1, d2), Err(FusionError::DifferentDrivers(d1, d2)));
    assert_eq!(fuse_where(&g, d2, d1), Err(FusionError::NotAdjacent(d2, d1)));
    assert_eq!(fuse_where(&g, d1, d1), Err(FusionError::SameActor(d1)));
    let src = g.actors.iter().find(|a| matches!(a.kind, ActorKind::Source { .. })).unwrap().id;
    assert_eq!(fuse_where(&g, src, d1), Err(FusionError::NotWhere(src)));
}

fn pair_graph() -> DataflowGraph {
    let mut g = DataflowGraph::new();
    let f = Formula::Input(0);
    let a = g.add_actor(ActorKind::Operator { name: "a".into(), arity: 1, formula: f.clone() });
    let b = g.add_actor(ActorKind::Operator { name: "b".into(), arity: 1, formula: f });
    g.connect(a, 0, b, 0);
    g.connect(b, 0, a, 0);
    g
}

#[test]
fn mesh_trivial_cases() {
    let mut one = DataflowGraph::new();
    one.add_actor(ActorKind::Operator { name: "a".into(), arity: 0, formula: Formula::Const(1.0) });
    let p = map_mesh(&one, 1, 1, 1).unwrap();
    assert_eq!((p.metrics.wire_cost, p.metrics.imbalance), (0.0, 1.0));

    let p = map_mesh(&pair_graph(), 1, 2, 1).unwrap();
    // Two arcs (a->b and b->a), each of length one.
    assert_eq!(p.metrics.wire_cost, 2.0);
    assert_ne!(p.assignment[&ActorId(0)], p.assignment[&ActorId(1)]);
    assert_eq!(map_mesh(&pair_graph(), 1, 1, 1), Err(MappingError::InsufficientCapacity { actors: 2, slots: 1 }));
}

#[test]
fn canonical_mapping_never_worsens() {
    let g = lower_ndf(&parse(CANONICAL_PROGRAM).unwrap());
    let p = map_mesh(&g, 2, 2, 4).unwrap();
    assert_eq!(p.assignment.len(), 8);
    assert!(p.metrics.objective <= p.initial_metrics.objective);
    let again = evaluate_placement(&g, &p.assignment, &MeshOptions { rows: 2, cols: 2, capacity: 4, ..MeshOptions::default() });
    assert_eq!(again, p.metrics);
    assert!(p.to_dot(&g).contains("subgraph cluster_1_1"));
}
