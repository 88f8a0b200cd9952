//! Surrogate-gradient training of a gated pair of small networks.
//!
//! The model computes `if x < 0 then y := sin(x) else y := cos(x)` with each
//! builtin replaced by an [`Mlp`]. The hard gate has zero derivative almost
//! everywhere; the backward pass replaces it with the derivative of a sigmoid
//! of sharpness `beta`.

mod mlp;

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ActorKind, ArcKind, CmpOp, ConnectionPattern, DataflowGraph};
use crate::lower::{encode_predicate, LinearComparison, PATTERN_FALSE, PATTERN_TRUE};

pub use mlp::{Mlp, MlpGrad};

/// Source of the modelled program.
pub const TARGET_PROGRAM: &str = "input x;
if x < 0 then y := sin(x); else y := cos(x);;
output y;
";

/// Hidden widths of the reference experiment.
pub const HIDDEN_SIZES: [usize; 3] = [4, 8, 16];

pub fn target(x: f64) -> f64 {
    if x < 0.0 {
        x.sin()
    } else {
        x.cos()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Each network fits its own builtin on its side of the gate.
    Independent,
    /// The gated composite fits the program output.
    End2end,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Independent => "independent",
            Mode::End2end => "end2end",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(Mode::Independent),
            "end2end" => Ok(Mode::End2end),
            other => Err(format!("unknown mode `{other}` (expected independent or end2end)")),
        }
    }
}

/// How the gate behaves in the forward and backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateMode {
    /// Step forward, zero gate derivative.
    Hard,
    /// Step forward, sigmoid-derivative backward.
    Surrogate,
    /// Sigmoid forward and its exact derivative.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub beta: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Full-batch size: number of uniformly drawn training points.
    pub train_points: usize,
    pub test_points: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { hidden: 4, beta: 4.0, lr: 0.05, epochs: 5000, train_points: 256, test_points: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("training diverged (non-finite loss) at epoch {epoch} with seed {seed}")]
    Divergence { seed: u64, epoch: usize },
    #[error("hidden size must be positive")]
    EmptyHidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffModel {
    pub sin: Mlp,
    pub cos: Mlp,
    pub beta: f64,
    /// The gate selects `sin` when `x < threshold`.
    pub threshold: f64,
}

impl DiffModel {
    pub fn new(hidden: usize, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sin = Mlp::random(hidden, &mut rng);
        let cos = Mlp::random(hidden, &mut rng);
        Self { sin, cos, beta, threshold: 0.0 }
    }

    pub fn zeros(hidden: usize, beta: f64) -> Self {
        Self { sin: Mlp::zeros(hidden), cos: Mlp::zeros(hidden), beta, threshold: 0.0 }
    }

    /// Weight of the `sin` branch at `x` and its derivative with respect to `x`.
    pub fn gate(&self, x: f64, mode: GateMode) -> (f64, f64) {
        let z = self.threshold - x;
        let hard = if z > 0.0 { 1.0 } else { 0.0 };
        let sig = sigmoid(self.beta * z);
        let slope = -self.beta * sig * (1.0 - sig);
        match mode {
            GateMode::Hard => (hard, 0.0),
            GateMode::Surrogate => (hard, slope),
            GateMode::Smooth => (sig, slope),
        }
    }

    /// `y = g * s + (1 - g) * c`.
    pub fn forward_with(&self, x: f64, mode: GateMode) -> f64 {
        let (g, _) = self.gate(x, mode);
        g * self.sin.eval(x) + (1.0 - g) * self.cos.eval(x)
    }

    /// Hard-gate forward pass, the function the exported graph computes.
    pub fn forward(&self, x: f64) -> f64 {
        if x < self.threshold {
            self.sin.eval(x)
        } else {
            self.cos.eval(x)
        }
    }

    /// `dy/dx`; the gate contributes only through its surrogate or smooth slope.
    pub fn input_grad(&self, x: f64, mode: GateMode) -> f64 {
        let (g, dg) = self.gate(x, mode);
        let (s, c) = (self.sin.eval(x), self.cos.eval(x));
        g * self.sin.input_grad(x) + (1.0 - g) * self.cos.input_grad(x) + (s - c) * dg
    }

    /// Mean squared error of the composite against `t` and its parameter
    /// gradients under `mode`.
    pub fn loss_and_grad(&self, xs: &[f64], t: impl Fn(f64) -> f64, mode: GateMode) -> (f64, MlpGrad, MlpGrad) {
        let h = self.sin.hidden();
        let (mut gs, mut gc) = (Mlp::zeros(h), Mlp::zeros(h));
        let n = xs.len() as f64;
        let mut loss = 0.0;
        for &x in xs {
            let (s, hs) = self.sin.forward(x);
            let (c, hc) = self.cos.forward(x);
            let (g, _) = self.gate(x, mode);
            let e = g * s + (1.0 - g) * c - t(x);
            loss += e * e;
            let dy = 2.0 * e / n;
            self.sin.accumulate(x, &hs, dy * g, &mut gs);
            self.cos.accumulate(x, &hc, dy * (1.0 - g), &mut gc);
        }
        (loss / n, gs, gc)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.sin.params();
        p.extend(self.cos.params());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let k = 3 * self.sin.hidden() + 1;
        self.sin.set_params(&p[..k]);
        self.cos.set_params(&p[k..]);
    }

    /// Hard-gate mean squared error against the program on a uniform grid.
    pub fn test_mse(&self, points: usize) -> f64 {
        let xs = grid(points);
        xs.iter().map(|&x| (self.forward(x) - target(x)).powi(2)).sum::<f64>() / xs.len() as f64
    }
}

/// `points` evenly spaced values covering `[-pi, pi]`.
pub fn grid(points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points).map(|i| -PI + 2.0 * PI * i as f64 / (points - 1) as f64).collect()
}

fn mse_step(m: &mut Mlp, xs: &[f64], f: fn(f64) -> f64, lr: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut grad = Mlp::zeros(m.hidden());
    let n = xs.len() as f64;
    let mut loss = 0.0;
    for &x in xs {
        let (y, h) = m.forward(x);
        let e = y - f(x);
        loss += e * e;
        m.accumulate(x, &h, 2.0 * e / n, &mut grad);
    }
    m.step(&grad, lr);
    loss / n
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub mode: Mode,
    pub hidden: usize,
    pub seed: u64,
    pub mse: f64,
    pub model: DiffModel,
}

/// Trains a freshly initialised model and reports its test error.
pub fn train_model(mode: Mode, cfg: &TrainConfig) -> Result<TrainOutcome, LearnError> {
    if cfg.hidden == 0 {
        return Err(LearnError::EmptyHidden);
    }
    let mut model = DiffModel::new(cfg.hidden, cfg.beta, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_da7a);
    let xs: Vec<f64> = (0..cfg.train_points).map(|_| rng.gen_range(-PI..=PI)).collect();
    let (left, right): (Vec<f64>, Vec<f64>) = xs.iter().partition(|&&x| x < model.threshold);
    for epoch in 0..cfg.epochs {
        let loss = match mode {
            Mode::Independent => mse_step(&mut model.sin, &left, f64::sin, cfg.lr) + mse_step(&mut model.cos, &right, f64::cos, cfg.lr),
            Mode::End2end => {
                let (loss, gs, gc) = model.loss_and_grad(&xs, target, GateMode::Surrogate);
                model.sin.step(&gs, cfg.lr);
                model.cos.step(&gc, cfg.lr);
                loss
            }
        };
        if !loss.is_finite() {
            return Err(LearnError::Divergence { seed: cfg.seed, epoch });
        }
    }
    let mse = model.test_mse(cfg.test_points);
    if !mse.is_finite() {
        return Err(LearnError::Divergence { seed: cfg.seed, epoch: cfg.epochs });
    }
    Ok(TrainOutcome { mode, hidden: cfg.hidden, seed: cfg.seed, mse, model })
}

/// Test error of one training run.
pub fn train(mode: Mode, hidden: usize, seed: u64) -> Result<f64, LearnError> {
    train_model(mode, &TrainConfig { hidden, seed, ..TrainConfig::default() }).map(|o| o.mse)
}

/// Every mode, width and seed, trained in parallel.
pub fn run_experiment(base: &TrainConfig, hidden: &[usize], seeds: &[u64], modes: &[Mode]) -> Result<Vec<TrainOutcome>, LearnError> {
    let jobs: Vec<(Mode, usize, u64)> =
        modes.iter().flat_map(|&m| hidden.iter().flat_map(move |&h| seeds.iter().map(move |&s| (m, h, s)))).collect();
    jobs.into_par_iter().map(|(m, h, s)| train_model(m, &TrainConfig { hidden: h, seed: s, ..*base })).collect()
}

/// `mode,hidden,seed,mse` lines with a header.
pub fn results_csv(results: &[TrainOutcome]) -> String {
    let mut s = String::from("mode,hidden,seed,mse\n");
    for r in results {
        let _ = writeln!(s, "{},{},{},{:e}", r.mode, r.hidden, r.seed, r.mse);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub hidden: usize,
    pub independent: f64,
    pub end2end: f64,
    /// `independent - end2end`; positive when end-to-end training helps.
    pub gap: f64,
}

/// Seed-averaged test error per width.
pub fn summarize(results: &[TrainOutcome]) -> Vec<SummaryRow> {
    let mut widths: Vec<usize> = results.iter().map(|r| r.hidden).collect();
    widths.sort_unstable();
    widths.dedup();
    let mean = |h: usize, m: Mode| {
        let v: Vec<f64> = results.iter().filter(|r| r.hidden == h && r.mode == m).map(|r| r.mse).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    widths
        .into_iter()
        .map(|h| {
            let (i, e) = (mean(h, Mode::Independent), mean(h, Mode::End2end));
            SummaryRow { hidden: h, independent: i, end2end: e, gap: i - e }
        })
        .collect()
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = format!("{:>6} {:>14} {:>14} {:>14}\n", "hidden", "independent", "end2end", "gap");
    for r in rows {
        let _ = writeln!(s, "{:>6} {:>14.6e} {:>14.6e} {:>14.6e}", r.hidden, r.independent, r.end2end, r.gap);
    }
    s
}

/// Points in `[-pi, pi]` at least 0.1 away from the gate threshold.
pub fn check_points(model: &DiffModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = rng.gen_range(-PI..=PI);
        if (x - model.threshold).abs() > 0.1 {
            out.push(x);
        }
    }
    out
}

/// Largest relative difference between analytic and central-difference
/// (`h = 1e-5`) gradients of the loss over all parameters. `mode` is
/// [`GateMode::Hard`] or [`GateMode::Smooth`]; differences are relative to
/// `max(|analytic|, |numeric|, 1e-4)`.
pub fn grad_check(model: &DiffModel, points: &[f64], mode: GateMode) -> f64 {
    const H: f64 = 1e-5;
    let (_, gs, gc) = model.loss_and_grad(points, target, mode);
    let mut analytic = gs.params();
    analytic.extend(gc.params());
    let base = model.params();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + H;
        probe.set_params(&p);
        let up = probe.loss_and_grad(points, target, mode).0;
        p[i] = base[i] - H;
        probe.set_params(&p);
        let down = probe.loss_and_grad(points, target, mode).0;
        let numeric = (up - down) / (2.0 * H);
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
    }
    worst
}

/// The hard-gate model as a graph: both networks become operators and the
/// gate becomes a when driving a dynamic where that selects `y`.
pub fn export_ndf(model: &DiffModel) -> DataflowGraph {
    let mut g = DataflowGraph::new();
    let x = g.add_actor(ActorKind::Source { name: "x".into() });
    let fan_x = g.add_actor(ActorKind::Copy { token: ArcKind::Data, fanout: 3 });
    g.connect(x, 0, fan_x, 0);
    let when = g.add_actor(ActorKind::When {
        config: encode_predicate(&LinearComparison {
            variables: vec!["x".into()],
            coefficients: vec![1.0],
            relation: CmpOp::Lt,
            threshold: model.threshold,
        }),
    });
    g.connect(fan_x, 0, when, 0);
    // The true pattern sends the sin branch to y; the other branch is discarded.
    let mut patterns = vec![ConnectionPattern::zeros(2, 2); 2];
    patterns[PATTERN_TRUE as usize] = ConnectionPattern::identity(2);
    patterns[PATTERN_FALSE as usize] = ConnectionPattern::new(vec![vec![false, true], vec![true, false]]);
    let select = g.add_actor(ActorKind::DynamicWhere { patterns });
    g.connect(when, 0, select, 0);
    for (i, (name, net)) in [("mlp_sin", &model.sin), ("mlp_cos", &model.cos)].into_iter().enumerate() {
        let op = g.add_actor(ActorKind::Operator { name: name.into(), arity: 1, formula: net.formula() });
        g.connect(fan_x, 1 + i, op, 0);
        g.connect(op, 0, select, 1 + i);
    }
    let y = g.add_actor(ActorKind::Sink { name: "y".into() });
    g.connect(select, 0, y, 0);
    let discard = g.add_actor(ActorKind::Sink { name: "_y".into() });
    g.connect(select, 1, discard, 0);
    g
}
