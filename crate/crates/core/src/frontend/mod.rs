//! Front end for the mini-language: lexer, parser, static checks and the
//! reference interpreter that both lowerings are tested against.

mod ast;
mod check;
mod interp;
mod lexer;
mod parser;

use indexmap::IndexMap;
use thiserror::Error;

pub use ast::{assigned, reads, Ast, BinOp, BoolExpr, Builtin, NumExpr, Pos, Stmt};
pub use interp::{interpret, interpret_with_budget, DEFAULT_LOOP_BUDGET};

/// Variable bindings. Equality ignores insertion order.
pub type Env = IndexMap<String, f64>;

/// The running example: one `while` enclosing one `if`, two loop-carried
/// variables and one loop constant.
pub const CANONICAL_PROGRAM: &str = "input x, y;
n := 0;
while y < x do begin
  if n < 3 then y := y + x; else y := y * 2;;
  n := n + 1;
end;;
output y, n;
";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{pos}: lexical error: {message}")]
    Lex { pos: Pos, message: String },
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: type error: {message}")]
    Type { pos: Pos, message: String },
    #[error("{pos}: variable '{name}' may be used before it is assigned")]
    Unassigned { pos: Pos, name: String },
}

impl FrontendError {
    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Lex { pos, .. }
            | FrontendError::Syntax { pos, .. }
            | FrontendError::Type { pos, .. }
            | FrontendError::Unassigned { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("loop iteration budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("no value supplied for input '{0}'")]
    MissingInput(String),
}

/// Parses and statically checks `source`.
pub fn parse(source: &str) -> Result<Ast, FrontendError> {
    check::check(&parser::parse_raw(source)?)
}

/// Parses `k=v,k=v` input bindings.
pub fn parse_bindings(text: &str) -> Result<Env, String> {
    let mut env = Env::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("binding '{part}' is not of the form name=value"))?;
        let value: f64 = v.trim().parse().map_err(|_| format!("value '{}' for '{}' is not a number", v.trim(), k.trim()))?;
        env.insert(k.trim().to_string(), value);
    }
    Ok(env)
}

/// Formats bindings as `k=v k=v`.
pub fn format_bindings(env: &Env) -> String {
    env.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}
