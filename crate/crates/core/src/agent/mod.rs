//! Classical agent contract and the reference learners.

mod ps_lite;
mod rur;
mod scripted;

pub use ps_lite::PsLiteAgent;
pub use rur::{RurAgent, RurWithoutReplacement};
pub use scripted::ScriptedAgent;

use crate::rng::RngStream;
use crate::space::Spaces;

/// A percept as seen across the interface: raw label index plus reward flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Percept {
    pub index: usize,
    pub reward: bool,
}

impl Percept {
    /// The opening ε percept.
    pub const EMPTY: Percept = Percept {
        index: 0,
        reward: false,
    };

    pub fn new(index: usize, reward: bool) -> Self {
        Self { index, reward }
    }
}

/// Opaque classical learning agent.
///
/// `act` receives the latest percept and returns the next action index; the
/// agent records its own action internally. All randomness comes from the
/// supplied stream.
pub trait Agent: Send {
    fn spaces(&self) -> &Spaces;

    /// Restores the initial configuration.
    fn reset(&mut self);

    fn act(&mut self, percept: Percept, rng: &mut RngStream) -> usize;

    /// Whether every action sequence has non-zero probability from reset.
    fn is_stochastic(&self) -> bool {
        true
    }
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn spaces(&self) -> &Spaces {
        (**self).spaces()
    }

    fn reset(&mut self) {
        (**self).reset()
    }

    fn act(&mut self, percept: Percept, rng: &mut RngStream) -> usize {
        (**self).act(percept, rng)
    }

    fn is_stochastic(&self) -> bool {
        (**self).is_stochastic()
    }
}
