use std::fmt;

use crate::graph::{ActorId, ActorKind, Token};

/// One firing: tokens consumed from input ports and produced on output ports.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub step: u64,
    pub actor: ActorId,
    pub consumed: Vec<(usize, Token)>,
    pub produced: Vec<(usize, Token)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

fn tokens(list: &[(usize, Token)]) -> String {
    list.iter().map(|(p, t)| format!("{p}:{t}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} consumed=[{}] produced=[{}]", self.step, self.actor, tokens(&self.consumed), tokens(&self.produced))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

fn ports(list: &[(usize, Token)]) -> Vec<usize> {
    list.iter().map(|(p, _)| *p).collect()
}

fn data_values(list: &[(usize, Token)]) -> Vec<u64> {
    let mut v: Vec<u64> = list
        .iter()
        .filter_map(|(_, t)| match t {
            Token::Data(x) => Some(x.to_bits()),
            _ => None,
        })
        .collect();
    v.sort_unstable();
    v
}

/// Checks that a firing of `kind` consumed and produced exactly what its rule
/// allows. Returns a description of the first discrepancy.
pub fn check_firing(kind: &ActorKind, entry: &TraceEntry) -> Result<(), String> {
    let (c, p) = (&entry.consumed, &entry.produced);
    let fail = |what: &str| Err(format!("step {} actor {}: {what}", entry.step, entry.actor));
    match kind {
        ActorKind::Operator { arity, .. } | ActorKind::Decider { arity, .. } => {
            if ports(c) != (0..*arity).collect::<Vec<_>>() || p.len() != 1 {
                return fail("operator must consume every input once and produce one token");
            }
        }
        ActorKind::TrueGate | ActorKind::FalseGate => {
            let pass = matches!(kind, ActorKind::TrueGate);
            let Some((0, Token::Control(flag))) = c.first() else { return fail("gate without control token") };
            if ports(c) != vec![0, 1] {
                return fail("gate must consume control and data");
            }
            let expect = usize::from(*flag == pass);
            if p.len() != expect {
                return fail("gate passed or dropped the wrong way");
            }
        }
        ActorKind::Merge => {
            let Some((0, Token::Control(flag))) = c.first() else { return fail("merge without control token") };
            let side = if *flag { 1 } else { 2 };
            if ports(c) != vec![0, side] || p.len() != 1 {
                return fail("merge must consume control plus the selected side");
            }
        }
        ActorKind::StaticWhere { .. } | ActorKind::DynamicWhere { .. } => {
            if data_values(c) != data_values(p) || c.iter().filter(|(_, t)| matches!(t, Token::Switch(_))).count() > 1 {
                return fail("where must route every consumed data token exactly once");
            }
        }
        ActorKind::When { config } => {
            if ports(c) != (0..config.inputs).collect::<Vec<_>>() || p.len() > 1 {
                return fail("when must consume every input and emit at most one switch");
            }
        }
        ActorKind::Source { .. } | ActorKind::Const { .. } => {
            if !c.is_empty() || p.len() != 1 {
                return fail("source must produce exactly one token");
            }
        }
        ActorKind::Sink { .. } => {
            if c.len() != 1 || !p.is_empty() {
                return fail("sink must consume exactly one token");
            }
        }
        ActorKind::Copy { fanout, .. } => {
            if c.len() != 1 || ports(p) != (0..*fanout).collect::<Vec<_>>() || p.iter().any(|(_, t)| *t != c[0].1) {
                return fail("copy must duplicate its input onto every output");
            }
        }
    }
    Ok(())
}
