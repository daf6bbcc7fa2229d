//! Seeded random instance generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::model::{Bounds, ChannelConstraint, ModelError, NodeId, RebalancingInstance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("{m} edges do not fit on {n} nodes without antiparallel pairs (max {max})")]
    InfeasibleShape { n: usize, m: usize, max: usize },
    #[error("capacity and weight maxima must be positive")]
    ZeroMaximum,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub nodes: usize,
    pub edges: usize,
    pub cap_max: u64,
    pub weight_max: u64,
    pub seed: u64,
}

/// Zero-padded so that lexicographic order matches numeric order.
pub fn node_name(i: usize, n: usize) -> NodeId {
    let width = n.saturating_sub(1).to_string().len().max(3);
    NodeId::new(format!("n{i:0width$}"))
}

/// Draws `m` distinct unordered node pairs, orients each one at random and
/// draws capacities in `1..=cap_max` and weights in `1..=weight_max`.
///
/// Pairs are sampled by rejection: a candidate that duplicates an existing
/// edge or its reverse is redrawn.
pub fn generate_instance(p: GenParams) -> Result<RebalancingInstance, GenError> {
    let max = p.nodes * p.nodes.saturating_sub(1) / 2;
    if p.edges > max {
        return Err(GenError::InfeasibleShape { n: p.nodes, m: p.edges, max });
    }
    if p.cap_max == 0 || p.weight_max == 0 {
        return Err(GenError::ZeroMaximum);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(p.seed);
    let nodes: Vec<NodeId> = (0..p.nodes).map(|i| node_name(i, p.nodes)).collect();
    let mut used = std::collections::BTreeSet::new();
    let mut constraints = Vec::with_capacity(p.edges);
    // Dense requests are cheaper to fill by shuffling all pairs.
    if p.edges * 2 > max {
        let mut pairs: Vec<(usize, usize)> = (0..p.nodes).flat_map(|u| (u + 1..p.nodes).map(move |v| (u, v))).collect();
        pairs.shuffle(&mut rng);
        pairs.truncate(p.edges);
        for (u, v) in pairs {
            constraints.push(draw_edge(&mut rng, &nodes, u, v, p));
        }
    } else {
        while constraints.len() < p.edges {
            let u = rng.gen_range(0..p.nodes);
            let v = rng.gen_range(0..p.nodes);
            if u == v || !used.insert((u.min(v), u.max(v))) {
                continue;
            }
            constraints.push(draw_edge(&mut rng, &nodes, u.min(v), u.max(v), p));
        }
    }
    let bounds = Bounds { capacity_bound: p.cap_max, weight_bound: p.weight_max };
    Ok(RebalancingInstance::new(nodes, constraints, bounds)?)
}

fn draw_edge(rng: &mut ChaCha20Rng, nodes: &[NodeId], u: usize, v: usize, p: GenParams) -> ChannelConstraint {
    let (from, to) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
    let capacity = rng.gen_range(1..=p.cap_max);
    let weight = rng.gen_range(1..=p.weight_max);
    ChannelConstraint::new(nodes[from].clone(), nodes[to].clone(), capacity).with_weight(weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, m: usize, seed: u64) -> GenParams {
        GenParams { nodes: n, edges: m, cap_max: 4, weight_max: 1, seed }
    }

    #[test]
    fn triangle_shape() {
        let inst = generate_instance(params(3, 3, 7)).unwrap();
        assert_eq!(inst.edge_count(), 3);
        assert_eq!(inst.node_count(), 3);
        assert!(inst.edges().iter().all(|e| (1..=4).contains(&e.capacity) && e.weight == 1));
        let again = RebalancingInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn deterministic() {
        let a = generate_instance(params(8, 12, 3)).unwrap().to_json();
        let b = generate_instance(params(8, 12, 3)).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, generate_instance(params(8, 12, 4)).unwrap().to_json());
    }

    #[test]
    fn infeasible_shape() {
        assert!(matches!(generate_instance(params(2, 2, 0)), Err(GenError::InfeasibleShape { max: 1, .. })));
        assert!(generate_instance(params(2, 1, 0)).is_ok());
    }

    #[test]
    fn names_sort_numerically() {
        let inst = generate_instance(params(12, 20, 1)).unwrap();
        assert_eq!(inst.nodes()[2].as_str(), "n002");
        assert_eq!(inst.nodes()[11].as_str(), "n011");
    }

    #[test]
    fn sparse_large_instance() {
        let inst = generate_instance(GenParams { nodes: 100, edges: 400, cap_max: 1 << 20, weight_max: 3, seed: 9 }).unwrap();
        assert_eq!(inst.edge_count(), 400);
        assert!(inst.edges().iter().any(|e| e.weight > 1));
    }
}
