//! Configuration and dynamics of the `when` primitive: a spiking neuron with a
//! k-dimensional membrane potential whose state space is partitioned into
//! regions, each region emitting the switch token of one connection pattern.

use serde::{Deserialize, Serialize};

use super::CmpOp;

/// The function applied after integrating the weighted input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Nonlinearity {
    Identity,
    /// `v <- lambda * v + I^T W`, with `lambda` in (0, 1].
    Leak { lambda: f64 },
    /// Elementwise clamp of `v + I^T W` into `[lo, hi]`.
    Clamp { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetRule {
    ToZero,
    SubtractAnchor,
    None,
}

/// `normal . v > offset` when `strict`, otherwise `normal . v >= offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub strict: bool,
}

impl HalfSpace {
    pub fn contains(&self, v: &[f64]) -> bool {
        let dot: f64 = self.normal.iter().zip(v).map(|(a, b)| a * b).sum();
        if self.strict {
            dot > self.offset
        } else {
            dot >= self.offset
        }
    }
}

/// Conjunction of half-space tests; an empty conjunction matches everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub tests: Vec<HalfSpace>,
    pub pattern: u32,
    /// Subtracted from the membrane on firing under [`ResetRule::SubtractAnchor`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
}

impl Region {
    pub fn contains(&self, v: &[f64]) -> bool {
        self.tests.iter().all(|t| t.contains(v))
    }
}

/// Human-facing form of a linear comparison `sum(c_i * x_i) <rel> threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateLabel {
    pub variables: Vec<String>,
    pub coefficients: Vec<f64>,
    pub relation: CmpOp,
    pub threshold: f64,
    pub fire_on_true: bool,
}

impl std::fmt::Display for PredicateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .coefficients
            .iter()
            .zip(&self.variables)
            .map(|(c, v)| format!("{c}*{v}"))
            .collect();
        write!(f, "{} {} {}", terms.join(" + "), self.relation.symbol(), self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhenConfig {
    /// Membrane dimension.
    pub k: usize,
    /// Number of data inputs.
    pub inputs: usize,
    /// `inputs x k` weight matrix.
    pub weights: Vec<Vec<f64>>,
    pub nonlinearity: Nonlinearity,
    /// Checked in order; the first matching region fires.
    pub regions: Vec<Region>,
    pub reset: ResetRule,
    pub initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<PredicateLabel>,
}

impl WhenConfig {
    /// `I^T W`, accumulated input by input.
    pub fn drive(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for (x, row) in input.iter().zip(&self.weights) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        out
    }

    /// Membrane update `f(v + I^T W)`.
    pub fn update(&self, v: &[f64], input: &[f64]) -> Vec<f64> {
        let drive = self.drive(input);
        match self.nonlinearity {
            Nonlinearity::Identity => v.iter().zip(&drive).map(|(a, b)| a + b).collect(),
            Nonlinearity::Leak { lambda } => v.iter().zip(&drive).map(|(a, b)| lambda * a + b).collect(),
            Nonlinearity::Clamp { lo, hi } => v.iter().zip(&drive).map(|(a, b)| (a + b).clamp(lo, hi)).collect(),
        }
    }

    /// Index of the first region containing `v`.
    pub fn classify(&self, v: &[f64]) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(v))
    }

    /// One firing: integrate, classify, reset. Returns the emitted pattern id.
    pub fn step(&self, v: &mut Vec<f64>, input: &[f64]) -> Option<u32> {
        *v = self.update(v, input);
        let region = &self.regions[self.classify(v)?];
        match self.reset {
            ResetRule::ToZero => v.iter_mut().for_each(|x| *x = 0.0),
            ResetRule::SubtractAnchor => {
                if let Some(anchor) = &region.anchor {
                    v.iter_mut().zip(anchor).for_each(|(x, a)| *x -= a);
                }
            }
            ResetRule::None => {}
        }
        Some(region.pattern)
    }

    /// Distinct pattern ids this neuron can emit, ascending.
    pub fn emitted_patterns(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.regions.iter().map(|r| r.pattern).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The four-quadrant k=2 neuron: quadrant q (I..IV, counter-clockwise from
    /// the positive orthant) emits pattern q-1. Each half-axis belongs to the
    /// quadrant on its counter-clockwise side; the origin matches no region.
    pub fn quadrants() -> Self {
        let hs = |normal: [f64; 2], strict: bool| HalfSpace { normal: normal.to_vec(), offset: 0.0, strict };
        let region = |tests: Vec<HalfSpace>, pattern| Region { tests, pattern, anchor: None };
        WhenConfig {
            k: 2,
            inputs: 2,
            weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            nonlinearity: Nonlinearity::Identity,
            regions: vec![
                region(vec![hs([1.0, 0.0], true), hs([0.0, 1.0], false)], 0),
                region(vec![hs([-1.0, 0.0], false), hs([0.0, 1.0], true)], 1),
                region(vec![hs([-1.0, 0.0], true), hs([0.0, -1.0], false)], 2),
                region(vec![hs([1.0, 0.0], false), hs([0.0, -1.0], true)], 3),
            ],
            reset: ResetRule::None,
            initial: vec![0.0, 0.0],
            label: None,
        }
    }
}
