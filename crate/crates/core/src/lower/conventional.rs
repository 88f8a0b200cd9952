//! Gate/merge lowering in the classic static dataflow style.

use crate::frontend::{BoolExpr, Stmt};
use crate::graph::{ActorKind, Token};

use super::{branch_vars, loop_vars, predicate_of, rejoined, Lowerer, PortRef, Scope, Val};

impl Lowerer {
    fn decider(&mut self, scope: &mut Scope, cond: &BoolExpr) -> PortRef {
        let mut vars = cond.vars();
        if vars.is_empty() {
            vars.push(self.trigger(scope, &[]));
        }
        let ports: Vec<PortRef> = vars.iter().map(|v| self.port(scope, v)).collect();
        let predicate = predicate_of(cond, &vars);
        let d = self.b.add(ActorKind::Decider { name: cond.to_string(), arity: ports.len(), predicate });
        for (i, p) in ports.into_iter().enumerate() {
            self.b.feed(p, d, i);
        }
        (d, 0)
    }

    fn gates(&mut self, scope: &mut Scope, vars: &[String], ctrl: PortRef, pass_on_true: bool) -> Scope {
        let mut out = Scope::new();
        for v in vars {
            let data = self.port(scope, v);
            let gate = self.b.add(if pass_on_true { ActorKind::TrueGate } else { ActorKind::FalseGate });
            self.b.feed(ctrl, gate, 0);
            self.b.feed(data, gate, 1);
            out.insert(v.clone(), Val::Port((gate, 0)));
        }
        out
    }

    pub(crate) fn conv_while(&mut self, scope: &mut Scope, cond: &BoolExpr, body: &[Stmt], _top: bool) {
        let mut vars = loop_vars(scope, cond, body);
        if vars.is_empty() {
            vars.push(self.trigger(scope, &[]));
        }
        let mut merges = Vec::new();
        let mut head_scope = Scope::new();
        for v in &vars {
            let entry = self.port(scope, v);
            let m = self.b.add(ActorKind::Merge);
            self.b.feed(entry, m, 2);
            self.b.initial((m, 0), Token::Control(false));
            merges.push(m);
            head_scope.insert(v.clone(), Val::Port((m, 0)));
        }
        let ctrl = self.decider(&mut head_scope, cond);
        for &m in &merges {
            self.b.feed(ctrl, m, 0);
        }
        let mut body_scope = self.gates(&mut head_scope, &vars, ctrl, true);
        let exits = self.gates(&mut head_scope, &vars, ctrl, false);
        self.stmts(&mut body_scope, body, false);
        for (v, &m) in vars.iter().zip(&merges) {
            let back = self.port(&mut body_scope, v);
            self.b.feed(back, m, 1);
        }
        for (v, val) in exits {
            scope.insert(v, val);
        }
    }

    pub(crate) fn conv_if(&mut self, scope: &mut Scope, cond: &BoolExpr, then_b: &[Stmt], else_b: &[Stmt], _top: bool) {
        let ctrl = self.decider(scope, cond);
        let mut then_vars = branch_vars(scope, then_b, else_b);
        let mut else_vars = branch_vars(scope, else_b, then_b);
        if then_vars.is_empty() && !then_b.is_empty() {
            then_vars.push(self.trigger(scope, &cond.vars()));
        }
        if else_vars.is_empty() && !else_b.is_empty() {
            else_vars.push(self.trigger(scope, &cond.vars()));
        }
        let mut then_scope = self.gates(scope, &then_vars, ctrl, true);
        let mut else_scope = self.gates(scope, &else_vars, ctrl, false);
        self.stmts(&mut then_scope, then_b, false);
        self.stmts(&mut else_scope, else_b, false);
        for v in rejoined(scope, &then_scope, &else_scope, then_b, else_b) {
            let t = self.port(&mut then_scope, &v);
            let e = self.port(&mut else_scope, &v);
            let m = self.b.add(ActorKind::Merge);
            self.b.feed(ctrl, m, 0);
            self.b.feed(t, m, 1);
            self.b.feed(e, m, 2);
            scope.insert(v, Val::Port((m, 0)));
        }
    }
}
