use indexmap::IndexMap;

use super::ast::{Ast, BinOp, BoolExpr, Builtin, NumExpr, Stmt};
use super::{Env, InterpError};

/// Default cap on the total number of loop iterations per run.
pub const DEFAULT_LOOP_BUDGET: u64 = 1_000_000;

struct Machine {
    vars: IndexMap<String, f64>,
    outputs: Env,
    budget: u64,
    iterations: u64,
}

impl Machine {
    fn num(&self, e: &NumExpr) -> Result<f64, InterpError> {
        let v = match e {
            NumExpr::Lit(v) => *v,
            NumExpr::Var(n) => self.vars[n.as_str()],
            NumExpr::Neg(a) => -self.num(a)?,
            NumExpr::Bin(op, a, b) => {
                let (x, y) = (self.num(a)?, self.num(b)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(InterpError::DivisionByZero);
                        }
                        x / y
                    }
                }
            }
            NumExpr::Call(Builtin::Sin, a) => self.num(a)?.sin(),
            NumExpr::Call(Builtin::Cos, a) => self.num(a)?.cos(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(InterpError::NonFinite(e.to_string()))
        }
    }

    fn cond(&self, e: &BoolExpr) -> Result<bool, InterpError> {
        Ok(match e {
            BoolExpr::Lit(b) => *b,
            BoolExpr::Cmp(op, a, b) => op.apply(self.num(a)?, self.num(b)?),
            BoolExpr::And(a, b) => self.cond(a)? && self.cond(b)?,
            BoolExpr::Or(a, b) => self.cond(a)? || self.cond(b)?,
            BoolExpr::Not(a) => !self.cond(a)?,
        })
    }

    fn exec(&mut self, stmts: &[Stmt]) -> Result<(), InterpError> {
        for s in stmts {
            match s {
                // Inputs were bound before execution started.
                Stmt::Input(_) => {}
                Stmt::Output(names) => {
                    for n in names {
                        self.outputs.insert(n.clone(), self.vars[n.as_str()]);
                    }
                }
                Stmt::Assign(n, e) => {
                    let v = self.num(e)?;
                    self.vars.insert(n.clone(), v);
                }
                Stmt::If { cond, then_branch, else_branch } => {
                    if self.cond(cond)? {
                        self.exec(then_branch)?;
                    } else if let Some(e) = else_branch {
                        self.exec(e)?;
                    }
                }
                Stmt::While { cond, body } => {
                    while self.cond(cond)? {
                        self.iterations += 1;
                        if self.iterations > self.budget {
                            return Err(InterpError::BudgetExceeded(self.budget));
                        }
                        self.exec(body)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Big-step evaluation of `ast`; returns the bindings of `output` statements
/// in the order they were produced.
pub fn interpret(ast: &Ast, inputs: &Env) -> Result<Env, InterpError> {
    interpret_with_budget(ast, inputs, DEFAULT_LOOP_BUDGET)
}

pub fn interpret_with_budget(ast: &Ast, inputs: &Env, budget: u64) -> Result<Env, InterpError> {
    let mut vars = IndexMap::new();
    for name in ast.inputs() {
        let v = *inputs.get(&name).ok_or_else(|| InterpError::MissingInput(name.clone()))?;
        if !v.is_finite() {
            return Err(InterpError::NonFinite(name));
        }
        vars.insert(name, v);
    }
    let mut m = Machine { vars, outputs: Env::new(), budget, iterations: 0 };
    m.exec(&ast.program)?;
    Ok(m.outputs)
}
