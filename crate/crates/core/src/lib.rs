//! Optimal rebalancing for payment channel networks.
//!
//! Per-channel rebalancing constraints become a max-weight circulation,
//! which is split into cycles that settle atomically with hash-locked
//! contracts. The solve can also run over secret-shared inputs in a
//! simulated multi-party setting.

pub mod cycles;
pub mod execution;
pub mod generate;
pub mod model;
pub mod mpc;
pub mod oracle;
pub mod pipeline;
pub mod scenario;
pub mod solver;

pub use cycles::{decompose, validate_decomposition, CycleFlow, Decomposition};
pub use execution::{run_execution, setup_cycle_htlcs, AdversarySpec, Policy};
pub use model::{build_instance, ChannelConstraint, NodeId, RebalancingInstance};
pub use solver::{solve_rebalancing, Circulation, SolveReport};
