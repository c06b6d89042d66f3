use super::{Agent, Percept};
use crate::rng::RngStream;
use crate::space::Spaces;

/// Deterministic agent cycling through a fixed action list.
#[derive(Clone, Debug)]
pub struct ScriptedAgent {
    spaces: Spaces,
    script: Vec<usize>,
    pos: usize,
}

impl ScriptedAgent {
    pub fn new(spaces: Spaces, script: Vec<usize>) -> Self {
        assert!(!script.is_empty(), "script must hold at least one action");
        Self {
            spaces,
            script,
            pos: 0,
        }
    }
}

impl Agent for ScriptedAgent {
    fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    fn reset(&mut self) {
        self.pos = 0;
    }

    fn act(&mut self, _percept: Percept, _rng: &mut RngStream) -> usize {
        let a = self.script[self.pos];
        self.pos = (self.pos + 1) % self.script.len();
        a
    }

    fn is_stochastic(&self) -> bool {
        false
    }
}
