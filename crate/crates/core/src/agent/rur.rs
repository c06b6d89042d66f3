use std::collections::HashMap;

use super::{Agent, Percept};
use crate::rng::RngStream;
use crate::space::Spaces;

/// Random walk until rewarded, then replay the last epoch forever.
#[derive(Clone, Debug)]
pub struct RurAgent {
    spaces: Spaces,
    recent: Vec<usize>,
    winning: Option<Vec<usize>>,
    replay_pos: usize,
}

impl RurAgent {
    pub fn new(spaces: Spaces) -> Self {
        let m = spaces.epoch_len;
        Self {
            spaces,
            recent: Vec::with_capacity(m),
            winning: None,
            replay_pos: 0,
        }
    }

    /// The memorised winning sequence, once a reward has been seen.
    pub fn winning_sequence(&self) -> Option<&[usize]> {
        self.winning.as_deref()
    }
}

impl Agent for RurAgent {
    fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    fn reset(&mut self) {
        self.recent.clear();
        self.winning = None;
        self.replay_pos = 0;
    }

    fn act(&mut self, percept: Percept, rng: &mut RngStream) -> usize {
        let m = self.spaces.epoch_len;
        if percept.reward && self.winning.is_none() && self.recent.len() == m {
            self.winning = Some(self.recent.clone());
            self.replay_pos = 0;
        }
        if let Some(w) = &self.winning {
            let a = w[self.replay_pos];
            self.replay_pos = (self.replay_pos + 1) % m;
            return a;
        }
        let a = rng.index(self.spaces.num_actions());
        if self.recent.len() == m {
            self.recent.remove(0);
        }
        self.recent.push(a);
        a
    }
}

/// Random walk that never repeats an already tried epoch before winning.
///
/// Each epoch draws a fresh M-step sequence uniformly from the untried ones
/// (a lazily materialised Fisher–Yates shuffle), so the chance of a first
/// win within `g` games is exactly `g·W/N` for `W` winners among `N`.
#[derive(Clone, Debug)]
pub struct RurWithoutReplacement {
    spaces: Spaces,
    total: u64,
    drawn: u64,
    swaps: HashMap<u64, u64>,
    current: Vec<usize>,
    pos: usize,
    winning: Option<Vec<usize>>,
}

impl RurWithoutReplacement {
    pub fn new(spaces: Spaces) -> Self {
        let n = spaces.num_actions() as u64;
        let total = n
            .checked_pow(spaces.epoch_len as u32)
            .expect("sequence space fits in u64");
        Self {
            spaces,
            total,
            drawn: 0,
            swaps: HashMap::new(),
            current: Vec::new(),
            pos: 0,
            winning: None,
        }
    }

    fn draw_sequence(&mut self, rng: &mut RngStream) -> Vec<usize> {
        if self.drawn == self.total {
            // Every sequence tried: start a new pass.
            self.drawn = 0;
            self.swaps.clear();
        }
        let remaining = self.total - self.drawn;
        let pick = self.drawn + rng.below(remaining);
        let at = |s: &HashMap<u64, u64>, i: u64| *s.get(&i).unwrap_or(&i);
        let chosen = at(&self.swaps, pick);
        let head = at(&self.swaps, self.drawn);
        self.swaps.insert(pick, head);
        self.drawn += 1;
        let n = self.spaces.num_actions() as u64;
        let mut code = chosen;
        let mut seq = vec![0; self.spaces.epoch_len];
        for slot in seq.iter_mut().rev() {
            *slot = (code % n) as usize;
            code /= n;
        }
        seq
    }
}

impl Agent for RurWithoutReplacement {
    fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    fn reset(&mut self) {
        self.drawn = 0;
        self.swaps.clear();
        self.current.clear();
        self.pos = 0;
        self.winning = None;
    }

    fn act(&mut self, percept: Percept, rng: &mut RngStream) -> usize {
        let m = self.spaces.epoch_len;
        if percept.reward && self.winning.is_none() && self.pos == m {
            self.winning = Some(self.current.clone());
        }
        if self.pos == m || self.current.is_empty() {
            self.current = match &self.winning {
                Some(w) => w.clone(),
                None => self.draw_sequence(rng),
            };
            self.pos = 0;
        }
        let a = self.current[self.pos];
        self.pos += 1;
        a
    }
}
