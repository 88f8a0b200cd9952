//! Placement of computing actors on an R x C mesh of cores.
//!
//! Only computing actors are placed; sources, sinks and constants are
//! off-chip and copies are folded into the arcs they fan out, so a logical
//! edge runs from a producer to each consumer reached through copies.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{ActorId, ActorKind, DataflowGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("{actors} actors do not fit on {slots} slots")]
    InsufficientCapacity { actors: usize, slots: usize },
    #[error("mesh dimensions and capacity must be at least 1")]
    EmptyMesh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub rows: usize,
    pub cols: usize,
    pub capacity: usize,
    /// Weight of the load imbalance in the objective.
    pub alpha: f64,
    pub seed: u64,
    /// Upper bound on local-search passes.
    pub max_passes: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { rows: 2, cols: 2, capacity: 4, alpha: 1.0, seed: 0, max_passes: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlacementMetrics {
    pub max_load: f64,
    pub mean_load: f64,
    /// `max_load / mean_load`.
    pub imbalance: f64,
    /// Sum of Manhattan distances over logical edges.
    pub wire_cost: f64,
    /// `wire_cost + alpha * imbalance`.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub rows: usize,
    pub cols: usize,
    pub capacity: usize,
    pub assignment: BTreeMap<ActorId, (usize, usize)>,
    pub metrics: PlacementMetrics,
    pub initial_metrics: PlacementMetrics,
}

pub(crate) fn is_placed(kind: &ActorKind) -> bool {
    !matches!(kind, ActorKind::Copy { .. } | ActorKind::Source { .. } | ActorKind::Sink { .. } | ActorKind::Const { .. })
}

/// Load of one actor: one unit plus a quarter per port.
pub fn actor_load(kind: &ActorKind) -> f64 {
    1.0 + (kind.input_ports().len() + kind.output_ports().len()) as f64 / 4.0
}

/// Placed actors (by id) and logical edges between their indices.
fn logical(g: &DataflowGraph) -> (Vec<ActorId>, Vec<f64>, Vec<(usize, usize)>) {
    let mut ids: Vec<ActorId> = g.actors.iter().filter(|a| is_placed(&a.kind)).map(|a| a.id).collect();
    ids.sort();
    let index: HashMap<ActorId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let loads = ids.iter().map(|id| actor_load(&g.actor(*id).expect("placed actor").kind)).collect();
    let kinds: HashMap<ActorId, &ActorKind> = g.actors.iter().map(|a| (a.id, &a.kind)).collect();
    let mut edges = Vec::new();
    for arc in &g.arcs {
        let Some(&u) = index.get(&arc.src) else { continue };
        let mut frontier = vec![arc.dst];
        while let Some(d) = frontier.pop() {
            if let Some(&v) = index.get(&d) {
                edges.push((u, v));
            } else if let Some(ActorKind::Copy { .. }) = kinds.get(&d) {
                frontier.extend(g.arcs.iter().filter(|x| x.src == d).map(|x| x.dst));
            }
        }
    }
    (ids, loads, edges)
}

fn metrics(core_of: &[usize], loads: &[f64], edges: &[(usize, usize)], opts: &MeshOptions) -> PlacementMetrics {
    let cores = opts.rows * opts.cols;
    let mut per_core = vec![0.0; cores];
    for (i, &c) in core_of.iter().enumerate() {
        per_core[c] += loads[i];
    }
    let max_load = per_core.iter().cloned().fold(0.0, f64::max);
    let mean_load = per_core.iter().sum::<f64>() / cores as f64;
    let imbalance = if mean_load > 0.0 { max_load / mean_load } else { 1.0 };
    let pos = |c: usize| ((c / opts.cols) as i64, (c % opts.cols) as i64);
    let wire_cost = edges
        .iter()
        .map(|&(u, v)| {
            let ((r1, c1), (r2, c2)) = (pos(core_of[u]), pos(core_of[v]));
            ((r1 - r2).abs() + (c1 - c2).abs()) as f64
        })
        .sum();
    PlacementMetrics { max_load, mean_load, imbalance, wire_cost, objective: wire_cost + opts.alpha * imbalance }
}

/// Metrics of an explicit assignment of the graph's placed actors to cores.
pub fn evaluate_placement(g: &DataflowGraph, assignment: &BTreeMap<ActorId, (usize, usize)>, opts: &MeshOptions) -> PlacementMetrics {
    let (ids, loads, edges) = logical(g);
    let core_of: Vec<usize> = ids.iter().map(|id| assignment[id].0 * opts.cols + assignment[id].1).collect();
    metrics(&core_of, &loads, &edges, opts)
}

fn bfs_order(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
    }
    order
}

pub fn map_mesh(g: &DataflowGraph, rows: usize, cols: usize, capacity: usize) -> Result<Placement, MappingError> {
    map_mesh_with(g, &MeshOptions { rows, cols, capacity, ..MeshOptions::default() })
}

/// Breadth-first initial placement filled row-major, then pairwise-swap local
/// search over slots (empty slots included) that only accepts strict
/// improvements of the objective.
pub fn map_mesh_with(g: &DataflowGraph, opts: &MeshOptions) -> Result<Placement, MappingError> {
    if opts.rows == 0 || opts.cols == 0 || opts.capacity == 0 {
        return Err(MappingError::EmptyMesh);
    }
    let (ids, loads, edges) = logical(g);
    let n = ids.len();
    let n_slots = opts.rows * opts.cols * opts.capacity;
    if n > n_slots {
        return Err(MappingError::InsufficientCapacity { actors: n, slots: n_slots });
    }
    let mut slots: Vec<Option<usize>> = vec![None; n_slots];
    for (s, a) in bfs_order(n, &edges).into_iter().enumerate() {
        slots[s] = Some(a);
    }
    let core_of = |slots: &[Option<usize>]| {
        let mut c = vec![0; n];
        for (s, a) in slots.iter().enumerate() {
            if let Some(a) = a {
                c[*a] = s / opts.capacity;
            }
        }
        c
    };
    let initial = metrics(&core_of(&slots), &loads, &edges, opts);
    let mut best = initial;
    let mut pairs: Vec<(usize, usize)> = (0..n_slots)
        .flat_map(|i| ((i + 1)..n_slots).map(move |j| (i, j)))
        .filter(|(i, j)| i / opts.capacity != j / opts.capacity)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    pairs.shuffle(&mut rng);
    for _ in 0..opts.max_passes {
        let mut improved = false;
        for &(i, j) in &pairs {
            if slots[i].is_none() && slots[j].is_none() {
                continue;
            }
            slots.swap(i, j);
            let m = metrics(&core_of(&slots), &loads, &edges, opts);
            if m.objective < best.objective - 1e-12 {
                best = m;
                improved = true;
            } else {
                slots.swap(i, j);
            }
        }
        if !improved {
            break;
        }
    }
    let cores = core_of(&slots);
    let assignment = ids.iter().enumerate().map(|(i, id)| (*id, (cores[i] / opts.cols, cores[i] % opts.cols))).collect();
    Ok(Placement { rows: opts.rows, cols: opts.cols, capacity: opts.capacity, assignment, metrics: best, initial_metrics: initial })
}

impl Placement {
    /// Graphviz rendering with one cluster per core.
    pub fn to_dot(&self, g: &DataflowGraph) -> String {
        let mut s = String::from("digraph {\n  compound=true;\n");
        for r in 0..self.rows {
            for c in 0..self.cols {
                s.push_str(&format!("  subgraph cluster_{r}_{c} {{\n    label=\"core ({r},{c})\";\n"));
                for (id, _) in self.assignment.iter().filter(|(_, rc)| **rc == (r, c)) {
                    let a = g.actor(*id).expect("placed actor");
                    s.push_str(&format!("    n{} [label=\"{}: {}\"];\n", id.0, id.0, a.kind.label()));
                }
                s.push_str("  }\n");
            }
        }
        for a in g.sorted_actors() {
            if !self.assignment.contains_key(&a.id) {
                s.push_str(&format!("  n{} [label=\"{}: {}\", shape=box, style=dashed];\n", a.id.0, a.id.0, a.kind.label()));
            }
        }
        for arc in &g.arcs {
            s.push_str(&format!("  n{} -> n{};\n", arc.src.0, arc.dst.0));
        }
        s.push_str("}\n");
        s
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:<24}", "core", "actors")?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let actors: Vec<String> =
                    self.assignment.iter().filter(|(_, rc)| **rc == (r, c)).map(|(id, _)| id.0.to_string()).collect();
                writeln!(f, "({r},{c}){:<5} {}", "", actors.join(" "))?;
            }
        }
        let m = &self.metrics;
        writeln!(f, "max load   {:.3}", m.max_load)?;
        writeln!(f, "mean load  {:.3}", m.mean_load)?;
        writeln!(f, "imbalance  {:.3}", m.imbalance)?;
        writeln!(f, "wire cost  {}", m.wire_cost)?;
        write!(f, "objective  {:.3} (initial {:.3})", m.objective, self.initial_metrics.objective)
    }
}
