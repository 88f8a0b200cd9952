//! Where/when lowering.
//!
//! A loop is one static where at its head, one when deciding the condition
//! and one dynamic where that sends the loop bundle either around again or
//! out. The head static where takes entry values and loop-back values as
//! separate columns of the same row. An `if` is one when plus one dynamic
//! where; branch results are not merged eagerly but kept as joins, which
//! later where actors absorb as extra columns.

use crate::frontend::{BinOp, BoolExpr, NumExpr, Stmt};
use crate::graph::{ActorId, ActorKind, CmpOp, ConnectionPattern, Formula};

use super::predicate::{encode_predicate, linear_comparison, LinearComparison, PATTERN_FALSE, PATTERN_TRUE};
use super::{branch_vars, loop_vars, predicate_of, rejoined, Lowerer, PortRef, Scope, Val};

fn negate(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Ge,
        CmpOp::Le => CmpOp::Gt,
        CmpOp::Gt => CmpOp::Le,
        CmpOp::Ge => CmpOp::Lt,
        CmpOp::Eq => CmpOp::Ne,
        CmpOp::Ne => CmpOp::Eq,
    }
}

/// Pushes negations into comparisons and literals.
fn normalize(cond: &BoolExpr) -> BoolExpr {
    match cond {
        BoolExpr::Not(inner) => match normalize(inner) {
            BoolExpr::Cmp(op, a, b) => BoolExpr::Cmp(negate(op), a, b),
            BoolExpr::Lit(b) => BoolExpr::Lit(!b),
            BoolExpr::Not(x) => *x,
            other => BoolExpr::Not(Box::new(other)),
        },
        other => other.clone(),
    }
}

/// Two pattern tables of `2n` rows: the first sends column `c` to row
/// `row[c]`, the second to `n + row[c]`.
fn split_patterns(n: usize, rows: &[usize]) -> Vec<ConnectionPattern> {
    let mut table = vec![ConnectionPattern::zeros(0, 0); 2];
    table[PATTERN_TRUE as usize] = ConnectionPattern::from_routes(2 * n, &rows.iter().map(|&r| Some(r)).collect::<Vec<_>>());
    table[PATTERN_FALSE as usize] = ConnectionPattern::from_routes(2 * n, &rows.iter().map(|&r| Some(n + r)).collect::<Vec<_>>());
    table
}

impl Lowerer {
    /// A when actor that emits the true pattern exactly when `cond` holds.
    pub(crate) fn cond_when(&mut self, scope: &mut Scope, cond: &BoolExpr, top: bool) -> ActorId {
        let cond = normalize(cond);
        let (lc, inputs): (LinearComparison, Vec<PortRef>) = match &cond {
            BoolExpr::Cmp(op, a, b) => match linear_comparison(*op, a, b) {
                Some(mut lc) => {
                    if lc.variables.is_empty() {
                        lc.variables = vec![self.trigger(scope, &[])];
                        lc.coefficients = vec![0.0];
                    }
                    let ports = lc.variables.iter().map(|v| self.port(scope, v)).collect();
                    (lc, ports)
                }
                None => {
                    // Sign test on the difference, which is exact in floating point.
                    let diff = NumExpr::bin(BinOp::Sub, a.clone(), b.clone());
                    let val = self.expr(scope, &diff, top);
                    let lc = LinearComparison { variables: vec![diff.to_string()], coefficients: vec![1.0], relation: *op, threshold: 0.0 };
                    (lc, val.members())
                }
            },
            BoolExpr::Lit(b) => {
                let t = self.trigger(scope, &[]);
                let relation = if *b { CmpOp::Ge } else { CmpOp::Gt };
                let port = self.port(scope, &t);
                (LinearComparison { variables: vec![t], coefficients: vec![0.0], relation, threshold: 0.0 }, vec![port])
            }
            other => {
                let mut vars = other.vars();
                if vars.is_empty() {
                    vars.push(self.trigger(scope, &[]));
                }
                let ports: Vec<PortRef> = vars.iter().map(|v| self.port(scope, v)).collect();
                let formula = Formula::Indicator(Box::new(predicate_of(other, &vars)));
                let op = self.b.add(ActorKind::Operator { name: format!("[{other}]"), arity: ports.len(), formula });
                for (i, p) in ports.into_iter().enumerate() {
                    self.b.feed(p, op, i);
                }
                let lc = LinearComparison { variables: vec![format!("[{other}]")], coefficients: vec![1.0], relation: CmpOp::Ge, threshold: 1.0 };
                (lc, vec![(op, 0)])
            }
        };
        let when = self.b.add(ActorKind::When { config: encode_predicate(&lc) });
        for (i, p) in inputs.into_iter().enumerate() {
            self.b.feed(p, when, i);
        }
        when
    }

    pub(crate) fn ndf_while(&mut self, scope: &mut Scope, cond: &BoolExpr, body: &[Stmt], _top: bool) {
        let mut vars = loop_vars(scope, cond, body);
        if vars.is_empty() {
            vars.push(self.trigger(scope, &[]));
        }
        let n = vars.len();
        let head = self.b.add(ActorKind::StaticWhere { pattern: ConnectionPattern::zeros(n, 0) });
        let entry: Vec<Vec<PortRef>> = vars.iter().map(|v| scope[v.as_str()].members()).collect();
        let mut head_scope: Scope = vars.iter().enumerate().map(|(i, v)| (v.clone(), Val::Port((head, i)))).collect();
        let when = self.cond_when(&mut head_scope, cond, false);
        let dw = self.b.add(ActorKind::DynamicWhere { patterns: split_patterns(n, &(0..n).collect::<Vec<_>>()) });
        self.b.feed((when, 0), dw, 0);
        for (i, v) in vars.iter().enumerate() {
            let p = self.port(&mut head_scope, v);
            debug_assert_eq!(p, (head, i));
            self.b.feed(p, dw, 1 + i);
        }
        let mut body_scope: Scope = vars.iter().enumerate().map(|(i, v)| (v.clone(), Val::Port((dw, i)))).collect();
        self.stmts(&mut body_scope, body, false);
        let mut routes = Vec::new();
        for (i, v) in vars.iter().enumerate() {
            let back = body_scope[v.as_str()].members();
            for m in entry[i].iter().chain(&back) {
                self.b.feed(*m, head, routes.len());
                routes.push(Some(i));
            }
        }
        self.b.g.actor_mut(head).expect("head actor").kind = ActorKind::StaticWhere { pattern: ConnectionPattern::from_routes(n, &routes) };
        for (i, v) in vars.iter().enumerate() {
            scope.insert(v.clone(), Val::Port((dw, n + i)));
        }
    }

    pub(crate) fn ndf_if(&mut self, scope: &mut Scope, cond: &BoolExpr, then_b: &[Stmt], else_b: &[Stmt], top: bool) {
        let when = self.cond_when(scope, cond, top);
        let then_vars = branch_vars(scope, then_b, else_b);
        let else_vars = branch_vars(scope, else_b, then_b);
        let mut vars: Vec<String> = scope.keys().filter(|k| then_vars.contains(k) || else_vars.contains(k)).cloned().collect();
        if vars.is_empty() {
            vars.push(self.trigger(scope, &cond.vars()));
        }
        let m = vars.len();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for (i, v) in vars.iter().enumerate() {
            for p in scope[v.as_str()].members() {
                columns.push(p);
                rows.push(i);
            }
        }
        let dw = self.b.add(ActorKind::DynamicWhere { patterns: split_patterns(m, &rows) });
        self.b.feed((when, 0), dw, 0);
        for (c, p) in columns.into_iter().enumerate() {
            self.b.feed(p, dw, 1 + c);
        }
        let mut then_scope: Scope = vars.iter().enumerate().map(|(i, v)| (v.clone(), Val::Port((dw, i)))).collect();
        let mut else_scope: Scope = vars.iter().enumerate().map(|(i, v)| (v.clone(), Val::Port((dw, m + i)))).collect();
        self.stmts(&mut then_scope, then_b, false);
        self.stmts(&mut else_scope, else_b, false);
        for v in rejoined(scope, &then_scope, &else_scope, then_b, else_b) {
            let joined = Val::join(&then_scope[v.as_str()], &else_scope[v.as_str()]);
            scope.insert(v, joined);
        }
    }
}
