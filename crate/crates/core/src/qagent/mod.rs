//! The quantum-enhanced agent and the register hijacking protocols.

mod aq;
mod hijack;
mod kickback;
mod postselect;

pub use aq::{aq_construct, AqConfig, AqStatus, ProtocolCost, QuantumEnhancedAgent};
pub use hijack::{
    build_hermitian_extension, hijack_scavenge_oracularize, hijack_with_mutation,
    synthesized_map_distance, HermitianEnvExtension, HijackMutation,
};
pub use kickback::example1_kickback;
pub use postselect::{train_by_postselection, Conditioned, DEFAULT_RETRY_BUDGET};
