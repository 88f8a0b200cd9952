use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Formula;

/// One-input, one-output network with a single tanh hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Parameter gradients, laid out like [`Mlp`].
pub type MlpGrad = Mlp;

impl Mlp {
    pub fn zeros(hidden: usize) -> Self {
        Self { w1: vec![0.0; hidden], b1: vec![0.0; hidden], w2: vec![0.0; hidden], b2: 0.0 }
    }

    pub fn random<R: Rng>(hidden: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (hidden as f64).sqrt();
        Self {
            w1: (0..hidden).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            b1: (0..hidden).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            w2: (0..hidden).map(|_| rng.gen_range(-scale..scale)).collect(),
            b2: 0.0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    /// Output and hidden activations at `x`.
    pub fn forward(&self, x: f64) -> (f64, Vec<f64>) {
        let h: Vec<f64> = self.w1.iter().zip(&self.b1).map(|(w, b)| (w * x + b).tanh()).collect();
        let mut y = self.b2;
        for (w, a) in self.w2.iter().zip(&h) {
            y += w * a;
        }
        (y, h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.forward(x).0
    }

    /// `dy/dx` at `x`.
    pub fn input_grad(&self, x: f64) -> f64 {
        let (_, h) = self.forward(x);
        (0..self.hidden()).map(|j| self.w2[j] * (1.0 - h[j] * h[j]) * self.w1[j]).sum()
    }

    /// Adds `scale * dy/dtheta` at `x` into `grad`.
    pub fn accumulate(&self, x: f64, hidden: &[f64], scale: f64, grad: &mut MlpGrad) {
        for (j, &a) in hidden.iter().enumerate() {
            grad.w2[j] += scale * a;
            let dz = scale * self.w2[j] * (1.0 - a * a);
            grad.w1[j] += dz * x;
            grad.b1[j] += dz;
        }
        grad.b2 += scale;
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(3 * self.hidden() + 1);
        p.extend(&self.w1);
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let h = self.hidden();
        self.w1.copy_from_slice(&p[..h]);
        self.b1.copy_from_slice(&p[h..2 * h]);
        self.w2.copy_from_slice(&p[2 * h..3 * h]);
        self.b2 = p[3 * h];
    }

    /// `self -= lr * grad`.
    pub fn step(&mut self, grad: &MlpGrad, lr: f64) {
        let p: Vec<f64> = self.params().iter().zip(grad.params()).map(|(a, g)| a - lr * g).collect();
        self.set_params(&p);
    }

    /// The network as an operator formula over input 0, evaluated in the same
    /// order as [`Mlp::forward`].
    pub fn formula(&self) -> Formula {
        let mut y = Formula::Const(self.b2);
        for j in 0..self.hidden() {
            let pre = Formula::Add(
                Box::new(Formula::Mul(Box::new(Formula::Const(self.w1[j])), Box::new(Formula::Input(0)))),
                Box::new(Formula::Const(self.b1[j])),
            );
            let term = Formula::Mul(Box::new(Formula::Const(self.w2[j])), Box::new(Formula::Tanh(Box::new(pre))));
            y = Formula::Add(Box::new(y), Box::new(term));
        }
        y
    }
}
