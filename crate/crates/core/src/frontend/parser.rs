//! Recursive-descent parser producing an untyped tree; `check` turns it into
//! the two-sorted [`Ast`](super::Ast).
//!
//! ```text
//! program   = { stmt } ;
//! stmt      = "input" idents ";" | "output" idents ";"
//!           | ident ":=" expr ";"
//!           | "if" expr "then" stmt [ "else" stmt ] ";"
//!           | "while" expr "do" stmt ";"
//!           | "begin" { stmt } "end" ";" ;
//! idents    = ident { "," ident } ;
//! expr      = conj { "or" conj } ;
//! conj      = neg { "and" neg } ;
//! neg       = "not" neg | rel ;
//! rel       = sum [ ("<" | "<=" | ">" | ">=" | "=" | "<>" | "!=") sum ] ;
//! sum       = term { ("+" | "-") term } ;
//! term      = unary { ("*" | "/") unary } ;
//! unary     = "-" unary | atom ;
//! atom      = number | "true" | "false" | ident [ "(" expr ")" ] | "(" expr ")" ;
//! ```

use super::ast::Pos;
use super::lexer::{lex, Tok};
use super::FrontendError;
use crate::graph::CmpOp;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PKind {
    Num(f64),
    Bool(bool),
    Var(String),
    Neg(Box<PExpr>),
    Not(Box<PExpr>),
    Arith(char, Box<PExpr>, Box<PExpr>),
    Cmp(CmpOp, Box<PExpr>, Box<PExpr>),
    And(Box<PExpr>, Box<PExpr>),
    Or(Box<PExpr>, Box<PExpr>),
    Call(String, Box<PExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PExpr {
    pub kind: PKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RStmt {
    Input(Vec<(String, Pos)>),
    Output(Vec<(String, Pos)>),
    Assign(String, PExpr),
    If(PExpr, Vec<RStmt>, Option<Vec<RStmt>>),
    While(PExpr, Vec<RStmt>),
    Block(Vec<RStmt>),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(n) => format!("identifier '{n}'"),
            Tok::Num(v) => format!("number {v}"),
            Tok::Kw(k) => format!("'{k}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn error<T>(&self, expected: &str) -> Result<T, FrontendError> {
        Err(FrontendError::Syntax {
            pos: self.pos(),
            message: format!("expected {expected}, found {}", Self::describe(self.peek())),
        })
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Kw(x) if *x == k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&format!("'{s}'"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), FrontendError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.error(&format!("'{k}'"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), FrontendError> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                let p = self.pos();
                self.bump();
                Ok((n, p))
            }
            _ => self.error("identifier"),
        }
    }

    fn idents(&mut self) -> Result<Vec<(String, Pos)>, FrontendError> {
        let mut names = vec![self.ident()?];
        while self.eat_sym(",") {
            names.push(self.ident()?);
        }
        Ok(names)
    }

    fn stmt(&mut self) -> Result<RStmt, FrontendError> {
        if self.eat_kw("input") {
            let names = self.idents()?;
            self.expect_sym(";")?;
            return Ok(RStmt::Input(names));
        }
        if self.eat_kw("output") {
            let names = self.idents()?;
            self.expect_sym(";")?;
            return Ok(RStmt::Output(names));
        }
        if self.eat_kw("if") {
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let then_branch = self.stmt()?;
            let else_branch = if self.eat_kw("else") { Some(flatten(self.stmt()?)) } else { None };
            self.expect_sym(";")?;
            return Ok(RStmt::If(cond, flatten(then_branch), else_branch));
        }
        if self.eat_kw("while") {
            let cond = self.expr()?;
            self.expect_kw("do")?;
            let body = self.stmt()?;
            self.expect_sym(";")?;
            return Ok(RStmt::While(cond, flatten(body)));
        }
        if self.eat_kw("begin") {
            let mut body = Vec::new();
            while !matches!(self.peek(), Tok::Kw("end")) {
                if matches!(self.peek(), Tok::Eof) {
                    return self.error("'end'");
                }
                body.push(self.stmt()?);
            }
            self.bump();
            self.expect_sym(";")?;
            return Ok(RStmt::Block(body));
        }
        if let Tok::Ident(_) = self.peek() {
            let (name, _) = self.ident()?;
            self.expect_sym(":=")?;
            let e = self.expr()?;
            self.expect_sym(";")?;
            return Ok(RStmt::Assign(name, e));
        }
        self.error("statement")
    }

    fn expr(&mut self) -> Result<PExpr, FrontendError> {
        let mut lhs = self.conj()?;
        while matches!(self.peek(), Tok::Kw("or")) {
            self.bump();
            let rhs = self.conj()?;
            let pos = lhs.pos;
            lhs = PExpr { kind: PKind::Or(Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<PExpr, FrontendError> {
        let mut lhs = self.neg()?;
        while matches!(self.peek(), Tok::Kw("and")) {
            self.bump();
            let rhs = self.neg()?;
            let pos = lhs.pos;
            lhs = PExpr { kind: PKind::And(Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn neg(&mut self) -> Result<PExpr, FrontendError> {
        let pos = self.pos();
        if self.eat_kw("not") {
            let inner = self.neg()?;
            return Ok(PExpr { kind: PKind::Not(Box::new(inner)), pos });
        }
        self.rel()
    }

    fn rel(&mut self) -> Result<PExpr, FrontendError> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("<>") | Tok::Sym("!=") => CmpOp::Ne,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.sum()?;
        let pos = lhs.pos;
        Ok(PExpr { kind: PKind::Cmp(op, Box::new(lhs), Box::new(rhs)), pos })
    }

    fn sum(&mut self) -> Result<PExpr, FrontendError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => '+',
                Tok::Sym("-") => '-',
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let pos = lhs.pos;
            lhs = PExpr { kind: PKind::Arith(op, Box::new(lhs), Box::new(rhs)), pos };
        }
    }

    fn term(&mut self) -> Result<PExpr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => '*',
                Tok::Sym("/") => '/',
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            let pos = lhs.pos;
            lhs = PExpr { kind: PKind::Arith(op, Box::new(lhs), Box::new(rhs)), pos };
        }
    }

    fn unary(&mut self) -> Result<PExpr, FrontendError> {
        let pos = self.pos();
        if self.eat_sym("-") {
            let inner = self.unary()?;
            return Ok(PExpr { kind: PKind::Neg(Box::new(inner)), pos });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<PExpr, FrontendError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(PExpr { kind: PKind::Num(v), pos })
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(PExpr { kind: PKind::Bool(true), pos })
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(PExpr { kind: PKind::Bool(false), pos })
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat_sym("(") {
                    let arg = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(PExpr { kind: PKind::Call(name, Box::new(arg)), pos })
                } else {
                    Ok(PExpr { kind: PKind::Var(name), pos })
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}

fn flatten(s: RStmt) -> Vec<RStmt> {
    match s {
        RStmt::Block(body) => body,
        other => vec![other],
    }
}

pub(crate) fn parse_raw(src: &str) -> Result<Vec<RStmt>, FrontendError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    let mut program = Vec::new();
    while !matches!(p.peek(), Tok::Eof) {
        program.push(p.stmt()?);
    }
    Ok(program)
}
