use super::{Agent, Percept};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::space::Spaces;

/// A two-layer projective-simulation style learner.
///
/// Each (clip, action) edge carries a weight starting at 1; actions are drawn
/// in proportion to the weights of the current clip. The clip is the raw
/// percept, except at the start of an epoch where it is ε. When an epoch ends
/// rewarded, every edge used in that epoch gains `glow`; at every epoch end
/// all weights relax toward 1 by the factor `1 - damping`.
#[derive(Clone, Debug)]
pub struct PsLiteAgent {
    spaces: Spaces,
    glow: f64,
    damping: f64,
    weights: Vec<f64>,
    epoch_edges: Vec<usize>,
    step: usize,
}

impl PsLiteAgent {
    pub fn new(spaces: Spaces, glow: f64, damping: f64) -> Result<Self> {
        if !(glow > 0.0 && glow.is_finite()) {
            return Err(Error::BadHyperparameter(format!(
                "glow must be positive, got {glow}"
            )));
        }
        if !(0.0..1.0).contains(&damping) {
            return Err(Error::BadHyperparameter(format!(
                "damping must lie in [0, 1), got {damping}"
            )));
        }
        let size = spaces.percepts.len() * spaces.num_actions();
        Ok(Self {
            glow,
            damping,
            weights: vec![1.0; size],
            epoch_edges: Vec::with_capacity(spaces.epoch_len),
            step: 0,
            spaces,
        })
    }

    /// Probability of each action at `clip`.
    pub fn policy(&self, clip: usize) -> Vec<f64> {
        let n = self.spaces.num_actions();
        let row = &self.weights[clip * n..(clip + 1) * n];
        let z: f64 = row.iter().sum();
        row.iter().map(|w| w / z).collect()
    }

    fn close_epoch(&mut self, rewarded: bool) {
        if rewarded {
            for &e in &self.epoch_edges {
                self.weights[e] += self.glow;
            }
        }
        if self.damping > 0.0 {
            let keep = 1.0 - self.damping;
            for w in &mut self.weights {
                *w = 1.0 + keep * (*w - 1.0);
            }
        }
        self.epoch_edges.clear();
    }
}

impl Agent for PsLiteAgent {
    fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    fn reset(&mut self) {
        self.weights.fill(1.0);
        self.epoch_edges.clear();
        self.step = 0;
    }

    fn act(&mut self, percept: Percept, rng: &mut RngStream) -> usize {
        let m = self.spaces.epoch_len;
        if self.step > 0 && self.step.is_multiple_of(m) {
            self.close_epoch(percept.reward);
        }
        let clip = if self.step.is_multiple_of(m) {
            0
        } else {
            percept.index
        };
        let n = self.spaces.num_actions();
        let row = &self.weights[clip * n..(clip + 1) * n];
        let total: f64 = row.iter().sum();
        let mut u = rng.unit() * total;
        let mut a = n - 1;
        for (i, w) in row.iter().enumerate() {
            if u < *w {
                a = i;
                break;
            }
            u -= w;
        }
        self.epoch_edges.push(clip * n + a);
        self.step += 1;
        a
    }
}
