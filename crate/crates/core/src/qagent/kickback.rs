//! Single-step phase kick-back with a trivial percept.
//!
//! The environment owns a preparation register holding `|∗,0⟩`. Each step
//! it swaps that register into the percept interface (resetting it) and
//! then flips the reward bit of the interface when `R(a) = 1`. An agent that
//! overwrites the preparation register with `|∗,−⟩` gets the phase oracle.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qsim::{Layout, Register, RewardTable, StateVector, C64};
use crate::space::Spaces;

/// Runs one step on `input` (a state over the action register `A`).
///
/// Returns the state on `[A, E, Prep]`: action, percept interface (reward
/// bit), and the preparation register, which ends up holding the old
/// interface content `|0⟩`.
pub fn example1_kickback(
    spaces: &Spaces,
    rewards: &RewardTable,
    input: &StateVector,
    hijack: bool,
) -> Result<StateVector> {
    let proper = spaces.percepts.proper_indices().len();
    if proper != 1 || spaces.epoch_len != 1 || rewards.seq_len() != 1 {
        return Err(Error::NotTrivialPercept(format!(
            "{proper} raw percepts, {} steps per epoch",
            spaces.epoch_len
        )));
    }
    let n = spaces.num_actions();
    if rewards.num_actions() != n || input.amps().len() != n {
        return Err(Error::LayoutMismatch(format!(
            "expected {n} actions, got table {} and input {}",
            rewards.num_actions(),
            input.amps().len()
        )));
    }
    let layout = Layout::new(vec![
        Register::indexed("A", n),
        Register::indexed("E", 2),
        Register::indexed("Prep", 2),
    ])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let prep = if hijack {
        [C64::new(h, 0.0), C64::new(-h, 0.0)]
    } else {
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    };
    // Interface starts in |∗,0⟩.
    let factors = vec![
        input.amps().to_vec(),
        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        prep.to_vec(),
    ];
    let mut psi = StateVector::product(layout, &factors)?;

    let mut swap = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
    for e in 0..2 {
        for p in 0..2 {
            swap[(p * 2 + e, e * 2 + p)] = C64::new(1.0, 0.0);
        }
    }
    psi.apply_on(&["E", "Prep"], &swap)?;

    let mut flip = DMatrix::identity(2 * n, 2 * n);
    for a in rewards.winners() {
        flip[(2 * a, 2 * a)] = C64::new(0.0, 0.0);
        flip[(2 * a + 1, 2 * a + 1)] = C64::new(0.0, 0.0);
        flip[(2 * a, 2 * a + 1)] = C64::new(1.0, 0.0);
        flip[(2 * a + 1, 2 * a)] = C64::new(1.0, 0.0);
    }
    psi.apply_on(&["A", "E"], &flip)?;
    Ok(psi)
}
