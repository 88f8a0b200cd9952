//! Sort checking and definite assignment.

use std::collections::HashSet;

use super::ast::{Ast, BinOp, BoolExpr, Builtin, NumExpr, Pos, Stmt};
use super::parser::{PExpr, PKind, RStmt};
use super::FrontendError;

fn type_err<T>(pos: Pos, message: &str) -> Result<T, FrontendError> {
    Err(FrontendError::Type { pos, message: message.to_string() })
}

fn num(e: &PExpr, defined: &HashSet<String>) -> Result<NumExpr, FrontendError> {
    Ok(match &e.kind {
        PKind::Num(v) => NumExpr::Lit(*v),
        PKind::Var(n) => {
            if !defined.contains(n) {
                return Err(FrontendError::Unassigned { pos: e.pos, name: n.clone() });
            }
            NumExpr::Var(n.clone())
        }
        PKind::Neg(a) => NumExpr::Neg(Box::new(num(a, defined)?)),
        PKind::Arith(op, a, b) => {
            let op = match op {
                '+' => BinOp::Add,
                '-' => BinOp::Sub,
                '*' => BinOp::Mul,
                _ => BinOp::Div,
            };
            NumExpr::bin(op, num(a, defined)?, num(b, defined)?)
        }
        PKind::Call(name, arg) => {
            let b = match name.as_str() {
                "sin" => Builtin::Sin,
                "cos" => Builtin::Cos,
                _ => return type_err(e.pos, &format!("unknown function '{name}'")),
            };
            NumExpr::Call(b, Box::new(num(arg, defined)?))
        }
        PKind::Bool(_) | PKind::Not(_) | PKind::Cmp(..) | PKind::And(..) | PKind::Or(..) => {
            return type_err(e.pos, "expected a real-valued expression, found a boolean one")
        }
    })
}

fn boolean(e: &PExpr, defined: &HashSet<String>) -> Result<BoolExpr, FrontendError> {
    Ok(match &e.kind {
        PKind::Bool(b) => BoolExpr::Lit(*b),
        PKind::Not(a) => BoolExpr::Not(Box::new(boolean(a, defined)?)),
        PKind::And(a, b) => BoolExpr::And(Box::new(boolean(a, defined)?), Box::new(boolean(b, defined)?)),
        PKind::Or(a, b) => BoolExpr::Or(Box::new(boolean(a, defined)?), Box::new(boolean(b, defined)?)),
        PKind::Cmp(op, a, b) => BoolExpr::Cmp(*op, num(a, defined)?, num(b, defined)?),
        _ => return type_err(e.pos, "expected a boolean condition, found a real-valued expression"),
    })
}

fn block(
    stmts: &[RStmt],
    defined: &mut HashSet<String>,
    top_level: bool,
    inputs_seen: &mut HashSet<String>,
) -> Result<Vec<Stmt>, FrontendError> {
    let mut out = Vec::new();
    for s in stmts {
        match s {
            RStmt::Input(names) | RStmt::Output(names) if !top_level => {
                return Err(FrontendError::Syntax {
                    pos: names[0].1,
                    message: "input and output statements are only allowed at top level".into(),
                })
            }
            RStmt::Input(names) => {
                for (n, pos) in names {
                    if !inputs_seen.insert(n.clone()) {
                        return type_err(*pos, &format!("input '{n}' declared twice"));
                    }
                    defined.insert(n.clone());
                }
                out.push(Stmt::Input(names.iter().map(|(n, _)| n.clone()).collect()));
            }
            RStmt::Output(names) => {
                for (n, pos) in names {
                    if !defined.contains(n) {
                        return Err(FrontendError::Unassigned { pos: *pos, name: n.clone() });
                    }
                }
                out.push(Stmt::Output(names.iter().map(|(n, _)| n.clone()).collect()));
            }
            RStmt::Assign(name, e) => {
                let e = num(e, defined)?;
                defined.insert(name.clone());
                out.push(Stmt::Assign(name.clone(), e));
            }
            RStmt::If(cond, then_b, else_b) => {
                let cond = boolean(cond, defined)?;
                let mut then_def = defined.clone();
                let then_branch = block(then_b, &mut then_def, false, inputs_seen)?;
                let mut else_def = defined.clone();
                let else_branch = match else_b {
                    Some(b) => Some(block(b, &mut else_def, false, inputs_seen)?),
                    None => None,
                };
                *defined = then_def.intersection(&else_def).cloned().collect();
                out.push(Stmt::If { cond, then_branch, else_branch });
            }
            RStmt::While(cond, body) => {
                let cond = boolean(cond, defined)?;
                let mut body_def = defined.clone();
                let body = block(body, &mut body_def, false, inputs_seen)?;
                out.push(Stmt::While { cond, body });
            }
            RStmt::Block(body) => out.extend(block(body, defined, top_level, inputs_seen)?),
        }
    }
    Ok(out)
}

pub(crate) fn check(raw: &[RStmt]) -> Result<Ast, FrontendError> {
    let mut defined = HashSet::new();
    let mut inputs = HashSet::new();
    Ok(Ast { program: block(raw, &mut defined, true, &mut inputs)? })
}
