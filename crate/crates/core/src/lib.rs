//! Quantum-enhanced reinforcement learning on classical agents.
//!
//! Classical agents and environments interact through index-based percepts
//! and actions. A controllable deterministic environment can also be queried
//! as a phase oracle; [`qagent::aq_construct`] uses that oracle to find a
//! rewarded epoch with Grover search and then trains a copy of a classical
//! agent on it by post-selection. [`qsim`] holds the dense simulator behind
//! the quantum parts, and [`tester`] models the measurements that decide
//! whether an interaction counts as classical.

pub mod agent;
pub mod env;
pub mod error;
pub mod harness;
pub mod history;
pub mod interaction;
pub mod merit;
pub mod qagent;
pub mod qsim;
pub mod rng;
pub mod space;
pub mod tester;

pub use error::{Error, Result};
