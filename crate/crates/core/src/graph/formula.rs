use std::fmt;

use serde::{Deserialize, Serialize};

/// Arithmetic computed by an operator over its input ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Input(usize),
    Const(f64),
    Neg(Box<Formula>),
    Add(Box<Formula>, Box<Formula>),
    Sub(Box<Formula>, Box<Formula>),
    Mul(Box<Formula>, Box<Formula>),
    Div(Box<Formula>, Box<Formula>),
    Sin(Box<Formula>),
    Cos(Box<Formula>),
    Tanh(Box<Formula>),
    /// 1.0 when the predicate holds, else 0.0.
    Indicator(Box<Predicate>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
        }
    }
}

/// Boolean test computed by a decider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Bool(bool),
    Cmp(CmpOp, Box<Formula>, Box<Formula>),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

impl Formula {
    pub fn eval(&self, inputs: &[f64]) -> f64 {
        match self {
            Formula::Input(i) => inputs[*i],
            Formula::Const(c) => *c,
            Formula::Neg(a) => -a.eval(inputs),
            Formula::Add(a, b) => a.eval(inputs) + b.eval(inputs),
            Formula::Sub(a, b) => a.eval(inputs) - b.eval(inputs),
            Formula::Mul(a, b) => a.eval(inputs) * b.eval(inputs),
            Formula::Div(a, b) => a.eval(inputs) / b.eval(inputs),
            Formula::Sin(a) => a.eval(inputs).sin(),
            Formula::Cos(a) => a.eval(inputs).cos(),
            Formula::Tanh(a) => a.eval(inputs).tanh(),
            Formula::Indicator(p) => {
                if p.eval(inputs) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest input index referenced plus one.
    pub fn min_arity(&self) -> usize {
        match self {
            Formula::Input(i) => i + 1,
            Formula::Const(_) => 0,
            Formula::Neg(a) | Formula::Sin(a) | Formula::Cos(a) | Formula::Tanh(a) => a.min_arity(),
            Formula::Add(a, b) | Formula::Sub(a, b) | Formula::Mul(a, b) | Formula::Div(a, b) => {
                a.min_arity().max(b.min_arity())
            }
            Formula::Indicator(p) => p.min_arity(),
        }
    }

    pub fn has_nonfinite_const(&self) -> bool {
        match self {
            Formula::Input(_) => false,
            Formula::Const(c) => !c.is_finite(),
            Formula::Neg(a) | Formula::Sin(a) | Formula::Cos(a) | Formula::Tanh(a) => a.has_nonfinite_const(),
            Formula::Add(a, b) | Formula::Sub(a, b) | Formula::Mul(a, b) | Formula::Div(a, b) => {
                a.has_nonfinite_const() || b.has_nonfinite_const()
            }
            Formula::Indicator(p) => p.has_nonfinite_const(),
        }
    }
}

impl Predicate {
    pub fn eval(&self, inputs: &[f64]) -> bool {
        match self {
            Predicate::Bool(b) => *b,
            Predicate::Cmp(op, a, b) => op.apply(a.eval(inputs), b.eval(inputs)),
            Predicate::And(a, b) => a.eval(inputs) && b.eval(inputs),
            Predicate::Or(a, b) => a.eval(inputs) || b.eval(inputs),
            Predicate::Not(a) => !a.eval(inputs),
        }
    }

    pub fn min_arity(&self) -> usize {
        match self {
            Predicate::Bool(_) => 0,
            Predicate::Cmp(_, a, b) => a.min_arity().max(b.min_arity()),
            Predicate::And(a, b) | Predicate::Or(a, b) => a.min_arity().max(b.min_arity()),
            Predicate::Not(a) => a.min_arity(),
        }
    }

    fn has_nonfinite_const(&self) -> bool {
        match self {
            Predicate::Bool(_) => false,
            Predicate::Cmp(_, a, b) => a.has_nonfinite_const() || b.has_nonfinite_const(),
            Predicate::And(a, b) | Predicate::Or(a, b) => a.has_nonfinite_const() || b.has_nonfinite_const(),
            Predicate::Not(a) => a.has_nonfinite_const(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Input(i) => write!(f, "in{i}"),
            Formula::Const(c) => write!(f, "{c}"),
            Formula::Neg(a) => write!(f, "-({a})"),
            Formula::Add(a, b) => write!(f, "({a} + {b})"),
            Formula::Sub(a, b) => write!(f, "({a} - {b})"),
            Formula::Mul(a, b) => write!(f, "({a} * {b})"),
            Formula::Div(a, b) => write!(f, "({a} / {b})"),
            Formula::Sin(a) => write!(f, "sin({a})"),
            Formula::Cos(a) => write!(f, "cos({a})"),
            Formula::Tanh(a) => write!(f, "tanh({a})"),
            Formula::Indicator(p) => write!(f, "[{p}]"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Bool(b) => write!(f, "{b}"),
            Predicate::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Predicate::And(a, b) => write!(f, "({a} and {b})"),
            Predicate::Or(a, b) => write!(f, "({a} or {b})"),
            Predicate::Not(a) => write!(f, "not ({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_nested_formula() {
        // (in0 * 3) - in1
        let f = Formula::Sub(
            Box::new(Formula::Mul(Box::new(Formula::Input(0)), Box::new(Formula::Const(3.0)))),
            Box::new(Formula::Input(1)),
        );
        assert_eq!(f.eval(&[2.0, 1.0]), 5.0);
        assert_eq!(f.min_arity(), 2);
    }

    #[test]
    fn predicate_connectives() {
        let lt = Predicate::Cmp(CmpOp::Lt, Box::new(Formula::Input(0)), Box::new(Formula::Const(1.0)));
        let p = Predicate::And(Box::new(lt.clone()), Box::new(Predicate::Not(Box::new(Predicate::Bool(false)))));
        assert!(p.eval(&[0.5]));
        assert!(!p.eval(&[1.0]));
        assert_eq!(Formula::Indicator(Box::new(lt)).eval(&[0.0]), 1.0);
    }
}
