//! Encoding of linear comparisons as one-dimensional integrate-and-fire
//! neurons.

use std::fmt;

use indexmap::IndexMap;

use crate::frontend::{BinOp, NumExpr};
use crate::graph::{CmpOp, HalfSpace, Nonlinearity, PredicateLabel, Region, ResetRule, WhenConfig};

/// Switch token emitted when the comparison holds.
pub const PATTERN_TRUE: u32 = 0;
/// Switch token emitted when it does not.
pub const PATTERN_FALSE: u32 = 1;

/// `sum(coefficients[i] * variables[i]) <relation> threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearComparison {
    pub variables: Vec<String>,
    pub coefficients: Vec<f64>,
    pub relation: CmpOp,
    pub threshold: f64,
}

impl fmt::Display for LinearComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl LinearComparison {
    fn label(&self) -> PredicateLabel {
        PredicateLabel {
            variables: self.variables.clone(),
            coefficients: self.coefficients.clone(),
            relation: self.relation,
            threshold: self.threshold,
            fire_on_true: true,
        }
    }
}

type Affine = (IndexMap<String, f64>, f64);

fn affine(e: &NumExpr) -> Option<Affine> {
    Some(match e {
        NumExpr::Lit(v) => (IndexMap::new(), *v),
        NumExpr::Var(n) => (IndexMap::from([(n.clone(), 1.0)]), 0.0),
        NumExpr::Neg(a) => scale(affine(a)?, -1.0),
        NumExpr::Bin(BinOp::Add, a, b) => add(affine(a)?, affine(b)?, 1.0),
        NumExpr::Bin(BinOp::Sub, a, b) => add(affine(a)?, affine(b)?, -1.0),
        NumExpr::Bin(BinOp::Mul, a, b) => {
            let (a, b) = (affine(a)?, affine(b)?);
            match (a.0.is_empty(), b.0.is_empty()) {
                (true, _) => scale(b, a.1),
                (_, true) => scale(a, b.1),
                _ => return None,
            }
        }
        NumExpr::Bin(BinOp::Div, ..) | NumExpr::Call(..) => return None,
    })
}

fn scale((mut m, c): Affine, k: f64) -> Affine {
    m.values_mut().for_each(|v| *v *= k);
    (m, c * k)
}

fn add((mut m, c): Affine, (n, d): Affine, sign: f64) -> Affine {
    for (k, v) in n {
        *m.entry(k).or_insert(0.0) += sign * v;
    }
    (m, c + sign * d)
}

/// Rewrites `lhs op rhs` into linear form when both sides are affine in the
/// program variables. Variables keep their first-occurrence order, including
/// ones whose coefficients cancel.
pub fn linear_comparison(op: CmpOp, lhs: &NumExpr, rhs: &NumExpr) -> Option<LinearComparison> {
    let (m, c) = add(affine(lhs)?, affine(rhs)?, -1.0);
    let (variables, coefficients) = m.into_iter().unzip();
    Some(LinearComparison { variables, coefficients, relation: op, threshold: zero_sign(-c) })
}

fn zero_sign(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn test(normal: f64, offset: f64, strict: bool) -> HalfSpace {
    HalfSpace { normal: vec![normal], offset: zero_sign(offset), strict }
}

/// A k=1 neuron over the comparison's variables that emits [`PATTERN_TRUE`]
/// when the comparison holds and [`PATTERN_FALSE`] otherwise, resetting to
/// zero after every firing.
///
/// Neurons fire when the potential rises above the threshold, so `<` and `<=`
/// are encoded with negated weights and threshold. The attached label keeps
/// the comparison as written.
pub fn encode_predicate(cmp: &LinearComparison) -> WhenConfig {
    let sign = if matches!(cmp.relation, CmpOp::Lt | CmpOp::Le) { -1.0 } else { 1.0 };
    let t = sign * cmp.threshold;
    let region = |tests, pattern| Region { tests, pattern, anchor: None };
    let mut regions = match cmp.relation {
        CmpOp::Lt | CmpOp::Gt => vec![region(vec![test(1.0, t, true)], PATTERN_TRUE)],
        CmpOp::Le | CmpOp::Ge => vec![region(vec![test(1.0, t, false)], PATTERN_TRUE)],
        CmpOp::Eq => vec![region(vec![test(1.0, t, false), test(-1.0, -t, false)], PATTERN_TRUE)],
        CmpOp::Ne => vec![region(vec![test(1.0, t, true)], PATTERN_TRUE), region(vec![test(-1.0, -t, true)], PATTERN_TRUE)],
    };
    regions.push(region(vec![], PATTERN_FALSE));
    WhenConfig {
        k: 1,
        inputs: cmp.variables.len(),
        weights: cmp.coefficients.iter().map(|c| vec![zero_sign(sign * c)]).collect(),
        nonlinearity: Nonlinearity::Identity,
        regions,
        reset: ResetRule::ToZero,
        initial: vec![0.0],
        label: Some(cmp.label()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::frontend::{BoolExpr, Stmt};

    fn cond(src: &str) -> (CmpOp, NumExpr, NumExpr) {
        let ast = parse(&format!("input x, y; if {src} then x := 1;;")).unwrap();
        let Stmt::If { cond: BoolExpr::Cmp(op, a, b), .. } = &ast.program[1] else { panic!() };
        (*op, a.clone(), b.clone())
    }

    fn fire(cfg: &WhenConfig, input: &[f64]) -> Option<u32> {
        let mut v = cfg.initial.clone();
        cfg.step(&mut v, input)
    }

    #[test]
    fn example_from_the_running_text() {
        let (op, a, b) = cond("3*x - 2 < y");
        let lc = linear_comparison(op, &a, &b).unwrap();
        assert_eq!(lc.variables, vec!["x", "y"]);
        assert_eq!(lc.coefficients, vec![3.0, -1.0]);
        assert_eq!(lc.threshold, 2.0);
        let cfg = encode_predicate(&lc);
        let label = cfg.label.clone().unwrap();
        assert_eq!((label.coefficients.clone(), label.threshold, label.fire_on_true), (vec![3.0, -1.0], 2.0, true));
        assert_eq!(cfg.weights, vec![vec![-3.0], vec![1.0]]);
        assert_eq!(fire(&cfg, &[1.0, 2.0]), Some(PATTERN_TRUE));
        assert_eq!(fire(&cfg, &[1.0, 1.0]), Some(PATTERN_FALSE));
    }

    #[test]
    fn vacuous_comparison_is_always_false() {
        let (op, a, b) = cond("x < x");
        let lc = linear_comparison(op, &a, &b).unwrap();
        assert_eq!((lc.coefficients.clone(), lc.threshold), (vec![0.0], 0.0));
        let cfg = encode_predicate(&lc);
        for x in [-3.0, 0.0, 7.5] {
            assert_eq!(fire(&cfg, &[x]), Some(PATTERN_FALSE));
        }
    }

    #[test]
    fn every_relation_matches_direct_evaluation() {
        for rel in ["<", "<=", ">", ">=", "=", "<>"] {
            let (op, a, b) = cond(&format!("2*x + 1 {rel} y - x"));
            let cfg = encode_predicate(&linear_comparison(op, &a, &b).unwrap());
            for x in -3..=3 {
                for y in -4..=4 {
                    let (x, y) = (x as f64, y as f64);
                    let want = op.apply(2.0 * x + 1.0, y - x);
                    let got = fire(&cfg, &[x, y]) == Some(PATTERN_TRUE);
                    assert_eq!(got, want, "{rel} at x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn non_affine_sides_are_rejected() {
        let (op, a, b) = cond("x * y < 1");
        assert!(linear_comparison(op, &a, &b).is_none());
        let (op, a, b) = cond("x / 2 < 1");
        assert!(linear_comparison(op, &a, &b).is_none());
        let (op, a, b) = cond("sin(x) < y");
        assert!(linear_comparison(op, &a, &b).is_none());
    }
}
