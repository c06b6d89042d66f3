//! Dense state-vector and density-operator simulation.
//!
//! Basis order is mixed-radix over the register layout with register 0 most
//! significant. Everything is dense; the amplitude count is capped at
//! [`DEFAULT_DIM_CAP`].

mod density;
mod dump;
mod grover;
mod layout;
mod linalg;
mod oracle;
mod qaa;
mod search;
mod state;

pub use density::DensityOperator;
pub use dump::{read_state_dump, write_state_dump};
pub use grover::{
    grover_iterations, grover_search, grover_state, grover_success_probability, winner_mass,
    GroverOutcome, WinnerCount,
};
pub use layout::{Layout, Register};
pub use linalg::{embed_operator, hermitian_eigenvalues, is_unitary, operator_distance};
pub use oracle::{build_oracle, OracleKind, OracleSpec, QuantumChannel, RewardTable, SearchOracle};
pub use qaa::{
    build_conditioned_init_reflector, build_init_reflector, build_raw_percept_oracle,
    build_reward_reflector, qaa, QaaSystem,
};
pub use search::{max_reward_search, MaxRewardOutcome};
pub(crate) use state::sample as sample_index;
pub use state::StateVector;

pub use num_complex::Complex64 as C64;

/// Default cap on the number of amplitudes of any simulated register layout.
pub const DEFAULT_DIM_CAP: usize = 1 << 22;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
