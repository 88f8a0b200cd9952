//! Fusion of adjacent where actors and placement on a core mesh.

mod mesh;

use thiserror::Error;

use crate::graph::{ActorId, ActorKind, ConnectionPattern, DataflowGraph};

pub use mesh::{evaluate_placement, map_mesh, map_mesh_with, MappingError, MeshOptions, Placement, PlacementMetrics};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("unknown actor {0}")]
    UnknownActor(ActorId),
    #[error("actor {0} is not a where primitive")]
    NotWhere(ActorId),
    #[error("actor {0} cannot be fused with itself")]
    SameActor(ActorId),
    #[error("no output of actor {0} feeds actor {1}")]
    NotAdjacent(ActorId, ActorId),
    #[error("dynamic wheres {0} and {1} are driven by different when actors")]
    DifferentDrivers(ActorId, ActorId),
    #[error("pattern tables of {0} and {1} have different lengths")]
    TableMismatch(ActorId, ActorId),
    #[error("an arc from {0} to {1} carries initial tokens")]
    InternalTokens(ActorId, ActorId),
}

/// Boolean matrix product `b * a`.
pub fn bool_product(b: &ConnectionPattern, a: &ConnectionPattern) -> ConnectionPattern {
    assert_eq!(b.cols, a.rows, "inner dimensions differ");
    let matrix = (0..b.rows)
        .map(|i| (0..a.cols).map(|j| (0..b.cols).any(|k| b.matrix[i][k] && a.matrix[k][j])).collect())
        .collect();
    ConnectionPattern { rows: b.rows, cols: a.cols, matrix }
}

fn table(kind: &ActorKind) -> (Vec<ConnectionPattern>, bool) {
    match kind {
        ActorKind::StaticWhere { pattern } => (vec![pattern.clone()], false),
        ActorKind::DynamicWhere { patterns } => (patterns.clone(), true),
        _ => unreachable!("checked by caller"),
    }
}

/// The actor whose switch tokens reach dynamic where `dw`, looking through copies.
pub fn switch_driver(g: &DataflowGraph, dw: ActorId) -> Option<ActorId> {
    let mut at = g.arcs[g.arc_into(dw, 0)?].src;
    while let Some(ActorKind::Copy { .. }) = g.actor(at).map(|a| &a.kind) {
        at = g.arcs[g.arc_into(at, 0)?].src;
    }
    Some(at)
}

/// Layout of a fusion: which rows of `a` stay external, which column of `b`
/// each internal row feeds, and which columns of `b` stay external.
struct Layout {
    ext_rows: Vec<usize>,
    feeds: Vec<Option<usize>>,
    unfed_cols: Vec<usize>,
}

fn compose(pa: &ConnectionPattern, pb: &ConnectionPattern, l: &Layout) -> ConnectionPattern {
    let (ne, nb) = (l.ext_rows.len(), pb.cols);
    // a extended: rows are a's external rows then b's columns; columns are
    // a's columns then pass-through columns for b's unfed inputs.
    let mut a_ext = ConnectionPattern::zeros(ne + nb, pa.cols + l.unfed_cols.len());
    for r in 0..pa.rows {
        let target = match l.feeds[r] {
            Some(c) => ne + c,
            None => l.ext_rows.iter().position(|&e| e == r).expect("external row"),
        };
        for i in 0..pa.cols {
            a_ext.matrix[target][i] |= pa.matrix[r][i];
        }
    }
    for (u, &c) in l.unfed_cols.iter().enumerate() {
        a_ext.matrix[ne + c][pa.cols + u] = true;
    }
    // b extended with identity pass-through for a's external rows.
    let mut b_ext = ConnectionPattern::zeros(ne + pb.rows, ne + nb);
    for e in 0..ne {
        b_ext.matrix[e][e] = true;
    }
    for s in 0..pb.rows {
        for c in 0..nb {
            b_ext.matrix[ne + s][ne + c] = pb.matrix[s][c];
        }
    }
    bool_product(&b_ext, &a_ext)
}

/// Replaces where actors `a` and `b`, where `a` feeds `b`, by one where actor
/// that keeps `a`'s id.
///
/// Columns of the fused actor are `a`'s columns followed by `b`'s columns
/// that `a` does not feed; rows are `a`'s rows that do not feed `b`
/// followed by `b`'s rows.
pub fn fuse_where(g: &DataflowGraph, a: ActorId, b: ActorId) -> Result<DataflowGraph, FusionError> {
    let ka = &g.actor(a).ok_or(FusionError::UnknownActor(a))?.kind;
    let kb = &g.actor(b).ok_or(FusionError::UnknownActor(b))?.kind;
    for (id, k) in [(a, ka), (b, kb)] {
        if !k.is_where() {
            return Err(FusionError::NotWhere(id));
        }
    }
    if a == b {
        return Err(FusionError::SameActor(a));
    }
    let internal: Vec<usize> = (0..g.arcs.len()).filter(|&i| g.arcs[i].src == a && g.arcs[i].dst == b).collect();
    if internal.is_empty() {
        return Err(FusionError::NotAdjacent(a, b));
    }
    if g.initial_tokens.iter().any(|t| internal.contains(&t.arc_index)) {
        return Err(FusionError::InternalTokens(a, b));
    }
    let (ta, a_dyn) = table(ka);
    let (tb, b_dyn) = table(kb);
    if a_dyn && b_dyn {
        if switch_driver(g, a) != switch_driver(g, b) {
            return Err(FusionError::DifferentDrivers(a, b));
        }
        if ta.len() != tb.len() {
            return Err(FusionError::TableMismatch(a, b));
        }
    }
    let (a_off, b_off) = (ka.where_data_offset(), kb.where_data_offset());
    let mut feeds = vec![None; ta[0].rows];
    for &i in &internal {
        feeds[g.arcs[i].src_port] = Some(g.arcs[i].dst_port - b_off);
    }
    let layout = Layout {
        ext_rows: (0..ta[0].rows).filter(|&r| feeds[r].is_none()).collect(),
        unfed_cols: (0..tb[0].cols).filter(|c| !feeds.contains(&Some(*c))).collect(),
        feeds,
    };
    let len = ta.len().max(tb.len());
    let fused: Vec<ConnectionPattern> =
        (0..len).map(|k| compose(&ta[if a_dyn { k } else { 0 }], &tb[if b_dyn { k } else { 0 }], &layout)).collect();
    let dynamic = a_dyn || b_dyn;
    let f_off = usize::from(dynamic);
    let na = ta[0].cols;
    let ne = layout.ext_rows.len();

    let mut out = g.clone();
    out.actor_mut(a).expect("a exists").kind = if dynamic {
        ActorKind::DynamicWhere { patterns: fused }
    } else {
        ActorKind::StaticWhere { pattern: fused.into_iter().next().expect("one pattern") }
    };
    let mut dropped = internal.clone();
    let mut shrink_copy = None;
    for (i, arc) in out.arcs.iter_mut().enumerate() {
        if dropped.contains(&i) {
            continue;
        }
        if arc.dst == a {
            arc.dst_port = if a_dyn && arc.dst_port == 0 { 0 } else { f_off + arc.dst_port - a_off };
        } else if arc.dst == b {
            if b_dyn && arc.dst_port == 0 {
                if a_dyn {
                    dropped.push(i);
                    shrink_copy = Some((arc.src, arc.src_port));
                } else {
                    arc.dst = a;
                }
            } else {
                let c = arc.dst_port - b_off;
                let u = layout.unfed_cols.iter().position(|&x| x == c).expect("unfed column");
                arc.dst = a;
                arc.dst_port = f_off + na + u;
            }
        }
        if arc.src == a {
            arc.src_port = layout.ext_rows.iter().position(|&r| r == arc.src_port).expect("external row");
        } else if arc.src == b {
            arc.src = a;
            arc.src_port += ne;
        }
    }
    if let Some((copy, port)) = shrink_copy {
        // The shared driver reaches both actors through a copy; drop b's branch.
        if let Some(ActorKind::Copy { fanout, .. }) = out.actor_mut(copy).map(|x| &mut x.kind) {
            *fanout -= 1;
        }
        for arc in out.arcs.iter_mut().filter(|x| x.src == copy && x.src_port > port) {
            arc.src_port -= 1;
        }
    }
    dropped.sort_unstable();
    let remap: Vec<Option<usize>> = {
        let mut next = 0;
        (0..out.arcs.len())
            .map(|i| {
                if dropped.binary_search(&i).is_ok() {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    out.arcs = out.arcs.iter().enumerate().filter(|(i, _)| remap[*i].is_some()).map(|(_, x)| *x).collect();
    out.initial_tokens.retain(|t| remap[t.arc_index].is_some());
    for t in &mut out.initial_tokens {
        t.arc_index = remap[t.arc_index].expect("kept arc");
    }
    out.actors.retain(|x| x.id != b);
    Ok(out)
}

fn port_count(kind: &ActorKind) -> usize {
    kind.input_ports().len() + kind.output_ports().len()
}

/// Greedily fuses adjacent where pairs, lowest ids first, as long as the
/// fused actor has at most `granularity` ports in total.
pub fn auto_fuse(g: &DataflowGraph, granularity: usize) -> DataflowGraph {
    let mut cur = g.clone();
    'outer: loop {
        let mut wheres: Vec<ActorId> = cur.actors.iter().filter(|x| x.kind.is_where()).map(|x| x.id).collect();
        wheres.sort();
        for &a in &wheres {
            let mut succ: Vec<ActorId> =
                cur.arcs.iter().filter(|x| x.src == a && x.dst != a && wheres.contains(&x.dst)).map(|x| x.dst).collect();
            succ.sort();
            succ.dedup();
            for b in succ {
                if let Ok(next) = fuse_where(&cur, a, b) {
                    if port_count(&next.actor(a).expect("fused actor").kind) <= granularity {
                        cur = next;
                        continue 'outer;
                    }
                }
            }
        }
        return cur;
    }
}

#[cfg(test)]
mod tests;
