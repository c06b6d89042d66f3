//! Task environments.

mod controllable;
mod dephasing;
mod maze;
mod stochastic;

pub use controllable::{ControllableEnv, EnvMode};
pub use dephasing::DephasingExtension;
pub use maze::{MazeEnv, MazeSpec, PerceptMode, Vertex};
pub use stochastic::StochasticEnv;

use crate::agent::Percept;
use crate::error::{Error, Result};
use crate::qsim::RewardTable;
use crate::rng::RngStream;
use crate::space::Spaces;

/// Largest sequence space (in bits) enumerated to compute the winner fraction.
pub const ENUMERATION_BITS: u32 = 20;

/// Classical environment contract.
///
/// Episodic environments start a new epoch on their own after every
/// `epoch_len` actions.
pub trait Environment: Send {
    fn spaces(&self) -> &Spaces;

    /// Starts a new epoch.
    fn reset(&mut self);

    fn respond(&mut self, action: usize, rng: &mut RngStream) -> Percept;

    fn is_deterministic(&self) -> bool;
}

/// A deterministic single-win fixed-time game.
pub trait DeterministicTask: Environment + Clone {
    /// Reward of a full epoch of actions.
    fn reward_of(&self, actions: &[usize]) -> Result<bool>;

    /// Percepts emitted for a full epoch of actions.
    fn percepts_of(&self, actions: &[usize]) -> Result<Vec<Percept>>;

    /// Truth table of `reward_of` over all epochs.
    fn reward_table(&self) -> Result<RewardTable> {
        let s = self.spaces();
        let bits = (s.num_actions() as f64).log2() * s.epoch_len as f64;
        if bits > ENUMERATION_BITS as f64 {
            return Err(Error::DimensionCap {
                dim: usize::MAX,
                cap: 1 << ENUMERATION_BITS,
            });
        }
        let mut err = None;
        let t = RewardTable::from_fn(s.num_actions(), s.epoch_len, |a| {
            self.reward_of(a).unwrap_or_else(|e| {
                err = Some(e);
                false
            })
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(t),
        }
    }
}
