//! Simulated multi-party solve.
//!
//! This is a simulation, not a cryptographic protocol: shares and Beaver
//! multiplication are real, but all delegates run in one process and an honest
//! dealer supplies triples and ideal comparisons. It shows that the solve
//! fits the black-box primitives with an operation sequence fixed by the
//! public shape, and that it reproduces the plaintext optimum.

pub mod abb;
pub mod field;
pub mod oblivious;
pub mod sharing;
pub mod sortition;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{NodeId, RebalancingInstance};
use crate::solver::{Circulation, FlowEntry};

pub use abb::{Abb, OpKind, Transcript};
pub use oblivious::{
    private_solve, IterationSchedule, PrivateSolveConfig, PrivateSolveOutput, PublicShape, SharedInstance,
};
pub use sharing::{reconstruct, share, Share, SharedVector};
pub use sortition::{select_delegates, DelegateSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MpcError {
    #[error("cannot pick {k} delegates from {participants} participants")]
    KTooLarge { k: usize, participants: usize },
    #[error("at least two delegates are required, got {0}")]
    KTooSmall(usize),
    #[error("value {0} is outside the representable range")]
    OutOfRange(i128),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("modulus safety violated: {0}")]
    ModulusViolation(String),
    #[error("reconstructed flows are not a circulation: {0}")]
    InvalidCirculation(String),
}

fn check_matrix(shared: &SharedVector, instance: &RebalancingInstance) -> Result<usize, MpcError> {
    let n = instance.node_count();
    if shared.len() != n * n {
        return Err(MpcError::ShapeMismatch(format!(
            "{} shared positions for {n} nodes",
            shared.len()
        )));
    }
    Ok(n)
}

/// Opens the flow on every instance edge and checks it is a circulation.
pub fn reconstruct_circulation(shared: &SharedVector, instance: &RebalancingInstance) -> Result<Circulation, MpcError> {
    let n = check_matrix(shared, instance)?;
    let flows = instance
        .endpoints()
        .iter()
        .map(|&(u, v)| {
            let f = shared.reconstruct(u * n + v);
            u64::try_from(f).map_err(|_| MpcError::InvalidCirculation(format!("negative flow {f}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Circulation::new(instance, flows).map_err(|v| MpcError::InvalidCirculation(v.to_string()))
}

/// What each participant learns: the nonzero flows on its own edges.
pub type Disclosures = BTreeMap<NodeId, Vec<FlowEntry>>;

/// Opens, for each participant, exactly the flows on its incident edges.
/// Participants without incident flow get an empty list.
pub fn reveal_per_participant(shared: &SharedVector, instance: &RebalancingInstance) -> Result<Disclosures, MpcError> {
    let n = check_matrix(shared, instance)?;
    let mut out: Disclosures = instance.nodes().iter().map(|id| (id.clone(), Vec::new())).collect();
    for (edge, &(u, v)) in instance.edges().iter().zip(instance.endpoints()) {
        let amount = shared.reconstruct(u * n + v);
        if amount <= 0 {
            continue;
        }
        let entry = FlowEntry { from: edge.from.clone(), to: edge.to.clone(), amount: amount as u64 };
        for end in [&edge.from, &edge.to] {
            out.get_mut(end).expect("endpoint is a participant").push(entry.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_instance, ChannelConstraint};
    use crate::solver::solve_rebalancing;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn triangle_plus_isolated() -> RebalancingInstance {
        RebalancingInstance::new(
            ["A", "B", "C", "D"].map(NodeId::from),
            vec![
                ChannelConstraint::new("A", "B", 4),
                ChannelConstraint::new("B", "C", 4),
                ChannelConstraint::new("C", "A", 4),
            ],
            crate::model::Bounds { capacity_bound: 4, weight_bound: 1 },
        )
        .unwrap()
    }

    fn solve(inst: &RebalancingInstance, k: usize, seed: u64) -> PrivateSolveOutput {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let shared = SharedInstance::encode(inst, k, &mut rng).unwrap().with_shadow(inst);
        let shape = PublicShape::of(inst);
        private_solve(
            &shared,
            &shape,
            &IterationSchedule::worst_case(&shape),
            &PrivateSolveConfig { seed, shadow: true },
        )
        .unwrap()
    }

    #[test]
    fn triangle_private_solve() {
        let inst = triangle_plus_isolated();
        let out = solve(&inst, 3, 11);
        let circ = reconstruct_circulation(&out.circulation, &inst).unwrap();
        assert_eq!(circ.objective(), 12);
        assert_eq!(circ.objective(), solve_rebalancing(&inst, None).unwrap().objective);
    }

    #[test]
    fn disclosures_partition_the_circulation() {
        let inst = triangle_plus_isolated();
        let out = solve(&inst, 2, 5);
        let d = reveal_per_participant(&out.circulation, &inst).unwrap();
        assert!(d[&NodeId::from("D")].is_empty());
        let a: Vec<(&str, &str)> = d[&NodeId::from("A")].iter().map(|e| (e.from.as_str(), e.to.as_str())).collect();
        assert_eq!(a, vec![("A", "B"), ("C", "A")]);
        let mut seen: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
        for entries in d.values() {
            for e in entries {
                *seen.entry((e.from.clone(), e.to.clone())).or_default() += 1;
            }
        }
        assert_eq!(seen.len(), 3);
        assert!(seen.values().all(|&c| c == 2));
    }

    #[test]
    fn transcript_ignores_capacities_and_topology() {
        let bounds = crate::model::Bounds { capacity_bound: 5, weight_bound: 1 };
        let a = RebalancingInstance::new(
            ["A", "B", "C"].map(NodeId::from),
            vec![ChannelConstraint::new("A", "B", 5), ChannelConstraint::new("B", "C", 1), ChannelConstraint::new("C", "A", 3)],
            bounds,
        )
        .unwrap();
        let b = RebalancingInstance::new(
            ["A", "B", "C"].map(NodeId::from),
            vec![ChannelConstraint::new("B", "A", 2), ChannelConstraint::new("A", "C", 4), ChannelConstraint::new("C", "B", 1)],
            bounds,
        )
        .unwrap();
        let (ta, tb) = (solve(&a, 3, 1).transcript, solve(&b, 3, 2).transcript);
        assert_eq!(ta.dump(), tb.dump());
        assert!(!ta.is_empty());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let inst = triangle_plus_isolated();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let shared = SharedInstance::encode(&inst, 2, &mut rng).unwrap();
        let mut shape = PublicShape::of(&inst);
        shape.nodes = 3;
        let r = private_solve(&shared, &shape, &IterationSchedule::fixed(1), &PrivateSolveConfig { seed: 0, shadow: false });
        assert!(matches!(r, Err(MpcError::ShapeMismatch(_))));
        assert!(matches!(SharedInstance::encode(&inst, 1, &mut rng), Err(MpcError::KTooSmall(1))));
    }

    #[test]
    fn zero_schedule_returns_zero_circulation() {
        let inst = triangle_plus_isolated();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let shared = SharedInstance::encode(&inst, 2, &mut rng).unwrap();
        let shape = PublicShape::of(&inst);
        let out = private_solve(&shared, &shape, &IterationSchedule::fixed(0), &PrivateSolveConfig { seed: 0, shadow: false })
            .unwrap();
        assert!(reconstruct_circulation(&out.circulation, &inst).unwrap().is_zero());
        // Only the local setup arithmetic remains.
        assert_eq!(out.transcript.count(OpKind::Mul) + out.transcript.count(OpKind::Cmp), 0);
    }

    #[test]
    fn acyclic_instance_stays_zero() {
        let inst = build_instance(
            ["A", "B", "C"].map(NodeId::from),
            vec![ChannelConstraint::new("A", "B", 1), ChannelConstraint::new("B", "C", 1)],
        )
        .unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let shared = SharedInstance::encode(&inst, 2, &mut rng).unwrap().with_shadow(&inst);
        let shape = PublicShape::of(&inst);
        let out =
            private_solve(&shared, &shape, &IterationSchedule::fixed(3), &PrivateSolveConfig { seed: 0, shadow: true }).unwrap();
        assert!(reconstruct_circulation(&out.circulation, &inst).unwrap().is_zero());
    }
}
