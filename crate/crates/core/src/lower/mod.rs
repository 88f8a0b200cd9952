//! Lowering of checked programs into dataflow graphs.
//!
//! Both lowerings share one builder. Actors are created with sequential ids and
//! every use of an output port is recorded; [`Builder::finish`] then turns a
//! port with several consumers into an explicit Copy and gives unused ports a
//! discard sink (a sink whose name starts with `_`).

mod conventional;
mod ndf;
mod predicate;
mod stats;

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::frontend::{assigned, reads, Ast, BinOp, BoolExpr, Builtin, NumExpr, Stmt};
use crate::graph::{ActorId, ActorKind, DataflowGraph, Formula, InitialToken, Predicate, Token};

pub use predicate::{encode_predicate, linear_comparison, LinearComparison, PATTERN_FALSE, PATTERN_TRUE};
pub use stats::{stats, LoweringStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerOptions {
    /// One operator per assignment expression instead of one per node.
    pub fuse_expressions: bool,
}

impl Default for LowerOptions {
    fn default() -> Self {
        Self { fuse_expressions: true }
    }
}

/// Gate/merge lowering with default options.
pub fn lower_conventional(ast: &Ast) -> DataflowGraph {
    lower_conventional_with(ast, LowerOptions::default())
}

pub fn lower_conventional_with(ast: &Ast, opts: LowerOptions) -> DataflowGraph {
    Lowerer::new(Mode::Conventional, opts).program(ast)
}

/// Where/when lowering with default options.
pub fn lower_ndf(ast: &Ast) -> DataflowGraph {
    lower_ndf_with(ast, LowerOptions::default())
}

pub fn lower_ndf_with(ast: &Ast, opts: LowerOptions) -> DataflowGraph {
    Lowerer::new(Mode::Ndf, opts).program(ast)
}

pub(crate) type PortRef = (ActorId, usize);

/// Value of a variable during lowering. A join is a set of ports exactly one
/// of which carries the value on any execution path.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Val {
    Port(PortRef),
    Join(Vec<PortRef>),
}

impl Val {
    pub(crate) fn members(&self) -> Vec<PortRef> {
        match self {
            Val::Port(p) => vec![*p],
            Val::Join(ps) => ps.clone(),
        }
    }

    pub(crate) fn join(a: &Val, b: &Val) -> Val {
        let mut m = a.members();
        m.extend(b.members());
        Val::Join(m)
    }
}

pub(crate) type Scope = IndexMap<String, Val>;

#[derive(Debug, Default)]
pub(crate) struct Builder {
    pub g: DataflowGraph,
    outputs: Vec<PortRef>,
    consumers: HashMap<PortRef, Vec<PortRef>>,
    initial: Vec<(PortRef, Token)>,
}

impl Builder {
    pub fn add(&mut self, kind: ActorKind) -> ActorId {
        let n = kind.output_ports().len();
        let id = self.g.add_actor(kind);
        self.outputs.extend((0..n).map(|p| (id, p)));
        id
    }

    pub fn feed(&mut self, src: PortRef, dst: ActorId, dst_port: usize) {
        self.consumers.entry(src).or_default().push((dst, dst_port));
    }

    /// Places `token` on the arc that will end up feeding `dst`.
    pub fn initial(&mut self, dst: PortRef, token: Token) {
        self.initial.push((dst, token));
    }

    pub fn finish(mut self) -> DataflowGraph {
        let outputs = std::mem::take(&mut self.outputs);
        for src in outputs {
            let uses = self.consumers.remove(&src).unwrap_or_default();
            match uses.len() {
                0 => {
                    let sink = self.g.add_actor(ActorKind::Sink { name: "_".into() });
                    self.g.connect(src.0, src.1, sink, 0);
                }
                1 => {
                    self.g.connect(src.0, src.1, uses[0].0, uses[0].1);
                }
                n => {
                    let token = self.g.actor(src.0).expect("known actor").kind.output_ports()[src.1];
                    let copy = self.g.add_actor(ActorKind::Copy { token, fanout: n });
                    self.g.connect(src.0, src.1, copy, 0);
                    for (i, (dst, port)) in uses.into_iter().enumerate() {
                        self.g.connect(copy, i, dst, port);
                    }
                }
            }
        }
        for ((dst, port), token) in std::mem::take(&mut self.initial) {
            let arc_index = self.g.arc_into(dst, port).expect("initial token on a connected port");
            self.g.initial_tokens.push(InitialToken { arc_index, token });
        }
        self.g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Conventional,
    Ndf,
}

pub(crate) struct Lowerer {
    pub b: Builder,
    pub mode: Mode,
    pub opts: LowerOptions,
}

/// Name of the synthetic variable used when a construct has no data to
/// clock it.
const TICK: &str = "$t";

fn push_unique(out: &mut Vec<String>, v: &str) {
    if !out.iter().any(|x| x == v) {
        out.push(v.to_string());
    }
}

/// Variables whose incoming value `stmts` may read: uses not preceded by a
/// straight-line assignment at this level, plus everything a nested construct
/// reads or assigns.
pub(crate) fn needs(stmts: &[Stmt]) -> Vec<String> {
    let mut out = Vec::new();
    let mut killed: HashSet<String> = HashSet::new();
    for s in stmts {
        let used = match s {
            Stmt::Input(_) => vec![],
            Stmt::Output(names) => names.clone(),
            Stmt::Assign(_, e) => e.vars(),
            Stmt::If { .. } | Stmt::While { .. } => {
                let mut v = reads(std::slice::from_ref(s));
                v.extend(assigned(std::slice::from_ref(s)));
                v
            }
        };
        for v in used {
            if !killed.contains(&v) {
                push_unique(&mut out, &v);
            }
        }
        if let Stmt::Assign(n, _) = s {
            killed.insert(n.clone());
        }
    }
    out
}

/// Variables assigned by straight-line statements at the top of `stmts`.
pub(crate) fn kills(stmts: &[Stmt]) -> HashSet<String> {
    stmts
        .iter()
        .filter_map(|s| match s {
            Stmt::Assign(n, _) => Some(n.clone()),
            _ => None,
        })
        .collect()
}

/// Variables of `scope` that a loop over `cond`/`body` reads or assigns, in
/// scope order.
pub(crate) fn loop_vars(scope: &Scope, cond: &BoolExpr, body: &[Stmt]) -> Vec<String> {
    let mut touched: HashSet<String> = cond.vars().into_iter().collect();
    touched.extend(reads(body));
    touched.extend(assigned(body));
    scope.keys().filter(|k| touched.contains(*k)).cloned().collect()
}

/// Variables of `scope` that must be available inside `branch`, given that
/// the construct rejoins everything assigned in either branch.
pub(crate) fn branch_vars(scope: &Scope, branch: &[Stmt], other: &[Stmt]) -> Vec<String> {
    let mut want: HashSet<String> = needs(branch).into_iter().collect();
    let killed = kills(branch);
    for v in assigned(branch).into_iter().chain(assigned(other)) {
        if !killed.contains(&v) {
            want.insert(v);
        }
    }
    scope.keys().filter(|k| want.contains(*k)).cloned().collect()
}

/// Variables assigned in either branch that exist after the construct:
/// those defined before it, then new ones present in both branch scopes.
pub(crate) fn rejoined(scope: &Scope, then_scope: &Scope, else_scope: &Scope, then_b: &[Stmt], else_b: &[Stmt]) -> Vec<String> {
    let mut out = Vec::new();
    for v in assigned(then_b).into_iter().chain(assigned(else_b)) {
        if scope.contains_key(&v) {
            push_unique(&mut out, &v);
        }
    }
    let mut fresh: Vec<String> = then_scope.keys().filter(|k| !scope.contains_key(*k) && else_scope.contains_key(*k)).cloned().collect();
    // Keep the order of definitions stable across both branches.
    fresh.sort_by_key(|k| then_scope.get_index_of(k));
    out.extend(fresh);
    out
}

fn formula_of(e: &NumExpr, vars: &[String]) -> Formula {
    let sub = |x: &NumExpr| Box::new(formula_of(x, vars));
    match e {
        NumExpr::Lit(v) => Formula::Const(*v),
        NumExpr::Var(n) => Formula::Input(vars.iter().position(|v| v == n).expect("variable in input list")),
        NumExpr::Neg(a) => Formula::Neg(sub(a)),
        NumExpr::Bin(op, a, b) => match op {
            BinOp::Add => Formula::Add(sub(a), sub(b)),
            BinOp::Sub => Formula::Sub(sub(a), sub(b)),
            BinOp::Mul => Formula::Mul(sub(a), sub(b)),
            BinOp::Div => Formula::Div(sub(a), sub(b)),
        },
        NumExpr::Call(Builtin::Sin, a) => Formula::Sin(sub(a)),
        NumExpr::Call(Builtin::Cos, a) => Formula::Cos(sub(a)),
    }
}

pub(crate) fn predicate_of(e: &BoolExpr, vars: &[String]) -> Predicate {
    let sub = |x: &BoolExpr| Box::new(predicate_of(x, vars));
    match e {
        BoolExpr::Lit(b) => Predicate::Bool(*b),
        BoolExpr::Cmp(op, a, b) => Predicate::Cmp(*op, Box::new(formula_of(a, vars)), Box::new(formula_of(b, vars))),
        BoolExpr::And(a, b) => Predicate::And(sub(a), sub(b)),
        BoolExpr::Or(a, b) => Predicate::Or(sub(a), sub(b)),
        BoolExpr::Not(a) => Predicate::Not(sub(a)),
    }
}

impl Lowerer {
    fn new(mode: Mode, opts: LowerOptions) -> Self {
        Self { b: Builder::default(), mode, opts }
    }

    fn program(mut self, ast: &Ast) -> DataflowGraph {
        let mut scope = Scope::new();
        self.stmts(&mut scope, &ast.program, true);
        self.b.finish()
    }

    pub(crate) fn stmts(&mut self, scope: &mut Scope, stmts: &[Stmt], top: bool) {
        for s in stmts {
            match s {
                Stmt::Input(names) => {
                    for n in names {
                        let src = self.b.add(ActorKind::Source { name: n.clone() });
                        scope.insert(n.clone(), Val::Port((src, 0)));
                    }
                }
                Stmt::Output(names) => {
                    for n in names {
                        let p = self.port(scope, n);
                        let sink = self.b.add(ActorKind::Sink { name: n.clone() });
                        self.b.feed(p, sink, 0);
                    }
                }
                Stmt::Assign(n, e) => {
                    let v = self.expr(scope, e, top);
                    scope.insert(n.clone(), v);
                }
                Stmt::If { cond, then_branch, else_branch } => {
                    let else_b = else_branch.as_deref().unwrap_or(&[]);
                    match self.mode {
                        Mode::Conventional => self.conv_if(scope, cond, then_branch, else_b, top),
                        Mode::Ndf => self.ndf_if(scope, cond, then_branch, else_b, top),
                    }
                }
                Stmt::While { cond, body } => match self.mode {
                    Mode::Conventional => self.conv_while(scope, cond, body, top),
                    Mode::Ndf => self.ndf_while(scope, cond, body, top),
                },
            }
        }
    }

    /// Single port carrying `var`; joins are merged by a many-to-one static
    /// where, cached in the scope.
    pub(crate) fn port(&mut self, scope: &mut Scope, var: &str) -> PortRef {
        match scope.get(var).unwrap_or_else(|| panic!("variable '{var}' not in scope")).clone() {
            Val::Port(p) => p,
            Val::Join(members) => {
                let pattern = crate::graph::ConnectionPattern::new(vec![vec![true; members.len()]]);
                let sw = self.b.add(ActorKind::StaticWhere { pattern });
                for (i, m) in members.into_iter().enumerate() {
                    self.b.feed(m, sw, i);
                }
                scope.insert(var.to_string(), Val::Port((sw, 0)));
                (sw, 0)
            }
        }
    }

    /// A variable that carries one token per activation of the current
    /// context. At top level an empty scope gets a constant.
    pub(crate) fn trigger(&mut self, scope: &mut Scope, preferred: &[String]) -> String {
        if let Some(v) = preferred.iter().find(|v| scope.contains_key(*v)) {
            return v.clone();
        }
        if let Some(v) = scope.keys().next() {
            return v.clone();
        }
        let c = self.b.add(ActorKind::Const { value: 0.0 });
        scope.insert(TICK.to_string(), Val::Port((c, 0)));
        TICK.to_string()
    }

    fn operator(&mut self, scope: &mut Scope, name: String, vars: &[String], formula: Formula) -> PortRef {
        let ports: Vec<PortRef> = vars.iter().map(|v| self.port(scope, v)).collect();
        let op = self.b.add(ActorKind::Operator { name, arity: ports.len(), formula });
        for (i, p) in ports.into_iter().enumerate() {
            self.b.feed(p, op, i);
        }
        (op, 0)
    }

    /// Value of `e`; plain variables alias, everything else becomes operators.
    pub(crate) fn expr(&mut self, scope: &mut Scope, e: &NumExpr, top: bool) -> Val {
        if let NumExpr::Var(n) = e {
            return scope[n.as_str()].clone();
        }
        let vars = e.vars();
        if vars.is_empty() {
            let value = formula_of(e, &[]).eval(&[]);
            if top && value.is_finite() {
                return Val::Port((self.b.add(ActorKind::Const { value }), 0));
            }
            let t = self.trigger(scope, &[]);
            return Val::Port(self.operator(scope, e.to_string(), &[t], formula_of(e, &[])));
        }
        if self.opts.fuse_expressions {
            Val::Port(self.operator(scope, e.to_string(), &vars, formula_of(e, &vars)))
        } else {
            Val::Port(self.node(scope, e))
        }
    }

    /// One operator per node; variable-free subtrees are folded into the
    /// formula of the node that uses them.
    fn node(&mut self, scope: &mut Scope, e: &NumExpr) -> PortRef {
        let children: Vec<&NumExpr> = match e {
            NumExpr::Neg(a) | NumExpr::Call(_, a) => vec![a],
            NumExpr::Bin(_, a, b) => vec![a, b],
            _ => unreachable!("leaves are handled by the caller"),
        };
        let mut ports = Vec::new();
        let mut args = Vec::new();
        for c in children {
            if c.vars().is_empty() {
                args.push(formula_of(c, &[]));
            } else {
                let p = match c {
                    NumExpr::Var(n) => self.port(scope, n),
                    _ => self.node(scope, c),
                };
                args.push(Formula::Input(ports.len()));
                ports.push(p);
            }
        }
        let mut args = args.into_iter().map(Box::new);
        let mut next = || args.next().expect("child formula");
        let formula = match e {
            NumExpr::Neg(_) => Formula::Neg(next()),
            NumExpr::Call(Builtin::Sin, _) => Formula::Sin(next()),
            NumExpr::Call(Builtin::Cos, _) => Formula::Cos(next()),
            NumExpr::Bin(op, _, _) => {
                let (a, b) = (next(), next());
                match op {
                    BinOp::Add => Formula::Add(a, b),
                    BinOp::Sub => Formula::Sub(a, b),
                    BinOp::Mul => Formula::Mul(a, b),
                    BinOp::Div => Formula::Div(a, b),
                }
            }
            _ => unreachable!(),
        };
        let op = self.b.add(ActorKind::Operator { name: e.to_string(), arity: ports.len(), formula });
        for (i, p) in ports.into_iter().enumerate() {
            self.b.feed(p, op, i);
        }
        (op, 0)
    }
}
