//! Deterministic generator of random mini-language programs with bounded
//! loops, used for oracle-equivalence, determinacy and fusion testing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frontend::{interpret, parse, Ast, BinOp, BoolExpr, Builtin, Env, NumExpr, Stmt};
use crate::graph::CmpOp;

/// Input variables of every generated program.
pub const CORPUS_INPUTS: [&str; 3] = ["a", "b", "c"];

/// Programs whose outputs exceed this magnitude are discarded.
const MAGNITUDE_CAP: f64 = 1e9;
const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone)]
pub struct CorpusProgram {
    pub source: String,
    pub ast: Ast,
    /// Input bindings, all integers in [-5, 5].
    pub inputs: Vec<Env>,
    /// True when the program uses only `+`, `-` and `*`.
    pub exact: bool,
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    inexact: bool,
    fresh: usize,
}

const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

impl Gen<'_> {
    fn lit(&mut self) -> NumExpr {
        NumExpr::Lit(self.rng.gen_range(-5..=5) as f64)
    }

    fn leaf(&mut self, defined: &[String]) -> NumExpr {
        if self.rng.gen_bool(0.65) {
            NumExpr::var(defined.choose(self.rng).expect("inputs are always defined"))
        } else {
            self.lit()
        }
    }

    fn num(&mut self, defined: &[String], size: u32) -> NumExpr {
        if size == 0 || self.rng.gen_bool(0.3) {
            return self.leaf(defined);
        }
        let choice = self.rng.gen_range(0..if self.inexact { 10 } else { 7 });
        let sub = |g: &mut Self| g.num(defined, size - 1);
        match choice {
            0 | 1 => NumExpr::bin(BinOp::Add, sub(self), sub(self)),
            2 | 3 => NumExpr::bin(BinOp::Sub, sub(self), sub(self)),
            4 | 5 => {
                // Mostly scale by a literal to keep magnitudes moderate.
                if self.rng.gen_bool(0.7) {
                    NumExpr::bin(BinOp::Mul, self.lit(), sub(self))
                } else {
                    NumExpr::bin(BinOp::Mul, self.leaf(defined), self.leaf(defined))
                }
            }
            6 => NumExpr::Neg(Box::new(sub(self))),
            7 => {
                let d = *[2.0, 3.0, 4.0, -2.0, 5.0].choose(self.rng).expect("non-empty");
                NumExpr::bin(BinOp::Div, sub(self), NumExpr::Lit(d))
            }
            8 => NumExpr::Call(Builtin::Sin, Box::new(sub(self))),
            _ => NumExpr::Call(Builtin::Cos, Box::new(sub(self))),
        }
    }

    fn simple_cmp(&mut self, defined: &[String]) -> BoolExpr {
        let op = *OPS.choose(self.rng).expect("non-empty");
        let lhs = NumExpr::var(defined.choose(self.rng).expect("defined"));
        let rhs = if self.rng.gen_bool(0.5) { self.lit() } else { NumExpr::var(defined.choose(self.rng).expect("defined")) };
        BoolExpr::Cmp(op, lhs, rhs)
    }

    fn cond(&mut self, defined: &[String]) -> BoolExpr {
        let r: f64 = self.rng.gen();
        if r < 0.6 {
            self.simple_cmp(defined)
        } else if r < 0.75 {
            // Affine comparison such as 2*a - b < 3.
            let op = *OPS.choose(self.rng).expect("non-empty");
            let k = self.rng.gen_range(2..=3) as f64;
            let x = NumExpr::var(defined.choose(self.rng).expect("defined"));
            let y = NumExpr::var(defined.choose(self.rng).expect("defined"));
            let lhs = NumExpr::bin(BinOp::Sub, NumExpr::bin(BinOp::Mul, NumExpr::Lit(k), x), y);
            BoolExpr::Cmp(op, lhs, self.lit())
        } else if r < 0.85 {
            let op = *OPS.choose(self.rng).expect("non-empty");
            let lhs = NumExpr::bin(BinOp::Mul, self.leaf(defined), NumExpr::var(defined.choose(self.rng).expect("defined")));
            BoolExpr::Cmp(op, lhs, self.lit())
        } else {
            let a = self.simple_cmp(defined);
            let b = self.simple_cmp(defined);
            match self.rng.gen_range(0..3) {
                0 => BoolExpr::And(Box::new(a), Box::new(b)),
                1 => BoolExpr::Or(Box::new(a), Box::new(b)),
                _ => BoolExpr::Not(Box::new(a)),
            }
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn block(&mut self, defined: &mut Vec<String>, protected: &[String], depth: usize, len: usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        for _ in 0..len {
            let r: f64 = self.rng.gen();
            if depth < MAX_DEPTH && r < 0.22 {
                let cond = self.cond(defined);
                let mut then_def = defined.clone();
                let n = self.rng.gen_range(1..=3);
                let then_branch = self.block(&mut then_def, protected, depth + 1, n);
                let else_branch = if self.rng.gen_bool(0.7) {
                    let mut else_def = defined.clone();
                    let n = self.rng.gen_range(1..=3);
                    let b = self.block(&mut else_def, protected, depth + 1, n);
                    defined.extend(then_def.iter().filter(|v| else_def.contains(v) && !defined.contains(v)).cloned().collect::<Vec<_>>());
                    Some(b)
                } else {
                    None
                };
                out.push(Stmt::If { cond, then_branch, else_branch });
            } else if depth < MAX_DEPTH && r < 0.38 {
                let counter = self.fresh("i");
                out.push(Stmt::Assign(counter.clone(), NumExpr::Lit(0.0)));
                defined.push(counter.clone());
                let bound = self.rng.gen_range(1..=4) as f64;
                let mut cond = BoolExpr::Cmp(CmpOp::Lt, NumExpr::var(&counter), NumExpr::Lit(bound));
                if self.rng.gen_bool(0.2) {
                    cond = BoolExpr::And(Box::new(cond), Box::new(self.simple_cmp(defined)));
                }
                let mut inner_protected = protected.to_vec();
                inner_protected.push(counter.clone());
                let mut body_def = defined.clone();
                let n = self.rng.gen_range(1..=3);
                let mut body = self.block(&mut body_def, &inner_protected, depth + 1, n);
                body.push(Stmt::Assign(
                    counter.clone(),
                    NumExpr::bin(BinOp::Add, NumExpr::var(&counter), NumExpr::Lit(1.0)),
                ));
                out.push(Stmt::While { cond, body });
            } else {
                let size = self.rng.gen_range(0..=3);
                let e = self.num(defined, size);
                let candidates: Vec<&String> = defined.iter().filter(|v| !protected.contains(v)).collect();
                let target = if candidates.is_empty() || self.rng.gen_bool(0.45) {
                    self.fresh("v")
                } else {
                    candidates.choose(self.rng).map(|s| s.to_string()).expect("non-empty")
                };
                if !defined.contains(&target) {
                    defined.push(target.clone());
                }
                out.push(Stmt::Assign(target, e));
            }
        }
        out
    }
}

/// One random program; `inexact` enables division by literals and sin/cos.
pub fn generate_program(rng: &mut ChaCha8Rng, inexact: bool) -> Ast {
    let mut g = Gen { rng, inexact, fresh: 0 };
    let mut defined: Vec<String> = CORPUS_INPUTS.iter().map(|s| s.to_string()).collect();
    let mut program = vec![Stmt::Input(defined.clone())];
    let n = g.rng.gen_range(2..=5);
    program.extend(g.block(&mut defined, &[], 0, n));
    program.push(Stmt::Output(defined));
    Ast { program }
}

/// Random integer bindings for the corpus inputs.
pub fn sample_inputs(rng: &mut ChaCha8Rng) -> Env {
    CORPUS_INPUTS.iter().map(|n| (n.to_string(), rng.gen_range(-5..=5) as f64)).collect()
}

/// `programs` programs with `inputs_per_program` bindings each. Candidates
/// that fail or blow up under the interpreter on any binding are skipped.
pub fn generate_corpus(programs: usize, inputs_per_program: usize, seed: u64) -> Vec<CorpusProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(programs);
    while out.len() < programs {
        let inexact = rng.gen_bool(0.3);
        let ast = generate_program(&mut rng, inexact);
        let source = ast.to_string();
        let ast = parse(&source).expect("generated programs are well formed");
        let inputs: Vec<Env> = (0..inputs_per_program).map(|_| sample_inputs(&mut rng)).collect();
        let ok = inputs.iter().all(|i| match interpret(&ast, i) {
            Ok(o) => o.values().all(|v| v.abs() <= MAGNITUDE_CAP),
            Err(_) => false,
        });
        if ok {
            let exact = !ast.is_inexact();
            out.push(CorpusProgram { source, ast, inputs, exact });
        }
    }
    out
}
