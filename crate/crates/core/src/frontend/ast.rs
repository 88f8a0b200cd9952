use std::fmt;

use crate::graph::CmpOp;

/// Line and column (both 1-based) of a source location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Sin,
    Cos,
}

/// Real-valued expression.
#[derive(Debug, Clone, PartialEq)]
pub enum NumExpr {
    Lit(f64),
    Var(String),
    Neg(Box<NumExpr>),
    Bin(BinOp, Box<NumExpr>, Box<NumExpr>),
    Call(Builtin, Box<NumExpr>),
}

/// Boolean expression; only appears as an `if`/`while` condition.
#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Lit(bool),
    Cmp(CmpOp, NumExpr, NumExpr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Input(Vec<String>),
    Output(Vec<String>),
    Assign(String, NumExpr),
    If { cond: BoolExpr, then_branch: Vec<Stmt>, else_branch: Option<Vec<Stmt>> },
    While { cond: BoolExpr, body: Vec<Stmt> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ast {
    pub program: Vec<Stmt>,
}

impl NumExpr {
    pub fn var(name: &str) -> Self {
        NumExpr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, a: NumExpr, b: NumExpr) -> Self {
        NumExpr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Variables read, in first-occurrence order, without duplicates.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            NumExpr::Lit(_) => {}
            NumExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            NumExpr::Neg(a) | NumExpr::Call(_, a) => a.collect_vars(out),
            NumExpr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn has_division_or_builtin(&self) -> bool {
        match self {
            NumExpr::Lit(_) | NumExpr::Var(_) => false,
            NumExpr::Neg(a) => a.has_division_or_builtin(),
            NumExpr::Call(..) => true,
            NumExpr::Bin(op, a, b) => {
                *op == BinOp::Div || a.has_division_or_builtin() || b.has_division_or_builtin()
            }
        }
    }
}

impl BoolExpr {
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            BoolExpr::Lit(_) => {}
            BoolExpr::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BoolExpr::Not(a) => a.collect_vars(out),
        }
    }

    fn has_division_or_builtin(&self) -> bool {
        match self {
            BoolExpr::Lit(_) => false,
            BoolExpr::Cmp(_, a, b) => a.has_division_or_builtin() || b.has_division_or_builtin(),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => a.has_division_or_builtin() || b.has_division_or_builtin(),
            BoolExpr::Not(a) => a.has_division_or_builtin(),
        }
    }
}

/// Variables read anywhere in `stmts` (conditions included), first-occurrence order.
pub fn reads(stmts: &[Stmt]) -> Vec<String> {
    let mut out = Vec::new();
    for s in stmts {
        match s {
            Stmt::Input(_) => {}
            Stmt::Output(names) => {
                for n in names {
                    if !out.contains(n) {
                        out.push(n.clone());
                    }
                }
            }
            Stmt::Assign(_, e) => e.collect_vars(&mut out),
            Stmt::If { cond, then_branch, else_branch } => {
                cond.collect_vars(&mut out);
                for v in reads(then_branch).into_iter().chain(else_branch.as_deref().map(reads).unwrap_or_default()) {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Stmt::While { cond, body } => {
                cond.collect_vars(&mut out);
                for v in reads(body) {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
    }
    out
}

/// Variables assigned anywhere in `stmts`, first-occurrence order.
pub fn assigned(stmts: &[Stmt]) -> Vec<String> {
    let mut out = Vec::new();
    for s in stmts {
        let more = match s {
            Stmt::Input(names) => names.clone(),
            Stmt::Output(_) => vec![],
            Stmt::Assign(n, _) => vec![n.clone()],
            Stmt::If { then_branch, else_branch, .. } => {
                let mut v = assigned(then_branch);
                v.extend(else_branch.as_deref().map(assigned).unwrap_or_default());
                v
            }
            Stmt::While { body, .. } => assigned(body),
        };
        for v in more {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

impl Ast {
    /// True if any expression uses division, `sin` or `cos`.
    pub fn is_inexact(&self) -> bool {
        fn walk(stmts: &[Stmt]) -> bool {
            stmts.iter().any(|s| match s {
                Stmt::Assign(_, e) => e.has_division_or_builtin(),
                Stmt::If { cond, then_branch, else_branch } => {
                    cond.has_division_or_builtin() || walk(then_branch) || else_branch.as_deref().is_some_and(walk)
                }
                Stmt::While { cond, body } => cond.has_division_or_builtin() || walk(body),
                _ => false,
            })
        }
        walk(&self.program)
    }

    pub fn has_control(&self) -> bool {
        self.program.iter().any(|s| matches!(s, Stmt::If { .. } | Stmt::While { .. }))
    }

    /// Names declared by `input` statements, in order.
    pub fn inputs(&self) -> Vec<String> {
        self.program
            .iter()
            .filter_map(|s| match s {
                Stmt::Input(n) => Some(n.clone()),
                _ => None,
            })
            .flatten()
            .collect()
    }
}

// Pretty printing: the output re-parses to an equal Ast.

fn num_prec(e: &NumExpr) -> u8 {
    match e {
        NumExpr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        NumExpr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        NumExpr::Neg(_) => 3,
        _ => 4,
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Lit(v) => {
                if *v < 0.0 {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            NumExpr::Var(n) => f.write_str(n),
            NumExpr::Neg(a) => {
                if num_prec(a) < 3 {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            NumExpr::Bin(op, a, b) => {
                let p = num_prec(self);
                if num_prec(a) < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // Left-associative: the right operand needs parens at equal precedence.
                if num_prec(b) <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            NumExpr::Call(b, a) => {
                let name = match b {
                    Builtin::Sin => "sin",
                    Builtin::Cos => "cos",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Lit(b) => write!(f, "{b}"),
            BoolExpr::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            BoolExpr::And(a, b) => write!(f, "({a} and {b})"),
            BoolExpr::Or(a, b) => write!(f, "({a} or {b})"),
            BoolExpr::Not(a) => write!(f, "not ({a})"),
        }
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[Stmt], indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    if body.len() == 1 && !matches!(body[0], Stmt::Input(_) | Stmt::Output(_)) {
        write_stmt(f, &body[0], indent + 1)
    } else {
        writeln!(f, "{pad}begin")?;
        for s in body {
            write_stmt(f, s, indent + 1)?;
        }
        writeln!(f, "{pad}end;")
    }
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &Stmt, indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Input(n) => writeln!(f, "{pad}input {};", n.join(", ")),
        Stmt::Output(n) => writeln!(f, "{pad}output {};", n.join(", ")),
        Stmt::Assign(n, e) => writeln!(f, "{pad}{n} := {e};"),
        Stmt::If { cond, then_branch, else_branch } => {
            writeln!(f, "{pad}if {cond} then")?;
            write_body(f, then_branch, indent)?;
            if let Some(e) = else_branch {
                writeln!(f, "{pad}else")?;
                write_body(f, e, indent)?;
            }
            writeln!(f, "{pad};")
        }
        Stmt::While { cond, body } => {
            writeln!(f, "{pad}while {cond} do")?;
            write_body(f, body, indent)?;
            writeln!(f, "{pad};")
        }
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.program {
            write_stmt(f, s, 0)?;
        }
        Ok(())
    }
}
