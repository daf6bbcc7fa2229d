//! Rebalancing instances: participants, directed rebalancing capacities and
//! edge weights.
//!
//! A channel `(u, v)` whose owners want to move its balance from `balance`
//! toward `target` becomes a single directed edge carrying the difference.
//! At most one direction of a channel may have positive capacity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mpc::field::MODULUS;

/// Default upper bound on any single edge capacity (2^30 base units).
pub const DEFAULT_CAPACITY_BOUND: u64 = 1 << 30;
/// Default upper bound on edge weights; unit weights recover the plain objective.
pub const DEFAULT_WEIGHT_BOUND: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("node identifiers must be non-empty")]
    EmptyNodeId,
    #[error("node {0} listed more than once")]
    DuplicateNode(NodeId),
    #[error("edge {from}->{to} declared more than once")]
    DuplicateEdge { from: NodeId, to: NodeId },
    #[error("edges {from}->{to} and {to}->{from} both have positive capacity")]
    AntiparallelConflict { from: NodeId, to: NodeId },
    #[error("self loop on {0}")]
    SelfLoop(NodeId),
    #[error("edge {from}->{to} references a node that is not a participant: {missing}")]
    UnknownEndpoint {
        from: NodeId,
        to: NodeId,
        missing: NodeId,
    },
    #[error("edge {from}->{to} capacity {capacity} exceeds bound {bound}")]
    CapacityOverflow {
        from: NodeId,
        to: NodeId,
        capacity: u64,
        bound: u64,
    },
    #[error("edge {from}->{to} weight {weight} exceeds bound {bound}")]
    WeightOverflow {
        from: NodeId,
        to: NodeId,
        weight: u64,
        bound: u64,
    },
    #[error("bounds too large for the share modulus: 2*U*W*m = {product} must stay below {modulus}")]
    ModulusOverflow { product: u128, modulus: u64 },
    #[error("invalid instance json: {0}")]
    Json(String),
}

/// Opaque participant identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

fn default_weight() -> u64 {
    1
}

/// A directed rebalancing capacity `m(from, to)` with an objective weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConstraint {
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: u64,
    #[serde(default = "default_weight")]
    pub weight: u64,
}

impl ChannelConstraint {
    pub fn new(from: impl Into<NodeId>, to: impl Into<NodeId>, capacity: u64) -> Self {
        ChannelConstraint {
            from: from.into(),
            to: to.into(),
            capacity,
            weight: 1,
        }
    }

    pub fn with_weight(mut self, weight: u64) -> Self {
        self.weight = weight;
        self
    }
}

/// Current and desired balance of `u` in channel `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancePair {
    pub balance: u64,
    pub target: u64,
}

/// Turns a desired balance change into at most one directed capacity edge.
pub fn derive_capacity(u: &NodeId, v: &NodeId, pair: BalancePair) -> Option<ChannelConstraint> {
    use std::cmp::Ordering;
    match pair.target.cmp(&pair.balance) {
        Ordering::Greater => Some(ChannelConstraint::new(
            u.clone(),
            v.clone(),
            pair.target - pair.balance,
        )),
        Ordering::Less => Some(ChannelConstraint::new(
            v.clone(),
            u.clone(),
            pair.balance - pair.target,
        )),
        Ordering::Equal => None,
    }
}

/// Instance-level bounds, public to every party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub capacity_bound: u64,
    pub weight_bound: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            capacity_bound: DEFAULT_CAPACITY_BOUND,
            weight_bound: DEFAULT_WEIGHT_BOUND,
        }
    }
}

/// A validated rebalancing instance.
///
/// Nodes are sorted, edges are sorted by `(from, to)` and zero-capacity edges
/// are dropped, so two instances built from permutations of the same input
/// compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RebalancingInstance {
    nodes: Vec<NodeId>,
    edges: Vec<ChannelConstraint>,
    endpoints: Vec<(usize, usize)>,
    bounds: Bounds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    nodes: Vec<NodeId>,
    edges: Vec<ChannelConstraint>,
    #[serde(default = "default_weight_bound")]
    weight_bound: u64,
    #[serde(default = "default_capacity_bound")]
    capacity_bound: u64,
}

fn default_weight_bound() -> u64 {
    DEFAULT_WEIGHT_BOUND
}

fn default_capacity_bound() -> u64 {
    DEFAULT_CAPACITY_BOUND
}

/// Builds an instance with default bounds.
pub fn build_instance(
    nodes: impl IntoIterator<Item = NodeId>,
    constraints: impl IntoIterator<Item = ChannelConstraint>,
) -> Result<RebalancingInstance, ModelError> {
    RebalancingInstance::new(nodes, constraints, Bounds::default())
}

impl RebalancingInstance {
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        constraints: impl IntoIterator<Item = ChannelConstraint>,
        bounds: Bounds,
    ) -> Result<Self, ModelError> {
        let mut node_set = BTreeSet::new();
        for node in nodes {
            if node.as_str().is_empty() {
                return Err(ModelError::EmptyNodeId);
            }
            if !node_set.insert(node.clone()) {
                return Err(ModelError::DuplicateNode(node));
            }
        }

        let mut by_pair: BTreeMap<(NodeId, NodeId), ChannelConstraint> = BTreeMap::new();
        for c in constraints {
            if c.from == c.to {
                return Err(ModelError::SelfLoop(c.from));
            }
            for end in [&c.from, &c.to] {
                if !node_set.contains(end) {
                    return Err(ModelError::UnknownEndpoint {
                        from: c.from.clone(),
                        to: c.to.clone(),
                        missing: end.clone(),
                    });
                }
            }
            if c.capacity > bounds.capacity_bound {
                return Err(ModelError::CapacityOverflow {
                    from: c.from,
                    to: c.to,
                    capacity: c.capacity,
                    bound: bounds.capacity_bound,
                });
            }
            if c.weight > bounds.weight_bound {
                return Err(ModelError::WeightOverflow {
                    from: c.from,
                    to: c.to,
                    weight: c.weight,
                    bound: bounds.weight_bound,
                });
            }
            let key = (c.from.clone(), c.to.clone());
            if by_pair.contains_key(&key) {
                return Err(ModelError::DuplicateEdge {
                    from: c.from,
                    to: c.to,
                });
            }
            by_pair.insert(key, c);
        }

        by_pair.retain(|_, c| c.capacity > 0);
        for (from, to) in by_pair.keys() {
            if from < to && by_pair.contains_key(&(to.clone(), from.clone())) {
                return Err(ModelError::AntiparallelConflict {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
        }

        let nodes: Vec<NodeId> = node_set.into_iter().collect();
        let edges: Vec<ChannelConstraint> = by_pair.into_values().collect();

        let product = 2u128
            * u128::from(bounds.capacity_bound)
            * u128::from(bounds.weight_bound.max(1))
            * (edges.len().max(1) as u128);
        if product >= u128::from(MODULUS) {
            return Err(ModelError::ModulusOverflow {
                product,
                modulus: MODULUS,
            });
        }

        let index = |id: &NodeId| nodes.binary_search(id).expect("endpoint checked above");
        let endpoints = edges.iter().map(|e| (index(&e.from), index(&e.to))).collect();
        Ok(RebalancingInstance {
            nodes,
            edges,
            endpoints,
            bounds,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        Self::new(
            file.nodes,
            file.edges,
            Bounds {
                capacity_bound: file.capacity_bound,
                weight_bound: file.weight_bound,
            },
        )
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            weight_bound: self.bounds.weight_bound,
            capacity_bound: self.bounds.capacity_bound,
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[ChannelConstraint] {
        &self.edges
    }

    /// `(from, to)` node indices of every edge, aligned with [`Self::edges`].
    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.nodes.binary_search(id).ok()
    }

    pub fn edge_index(&self, from: &NodeId, to: &NodeId) -> Option<usize> {
        self.edges
            .binary_search_by(|e| (&e.from, &e.to).cmp(&(from, to)))
            .ok()
    }

    pub fn max_capacity(&self) -> u64 {
        self.edges.iter().map(|e| e.capacity).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|&n| NodeId::from(n)).collect()
    }

    #[test]
    fn derive_capacity_directions() {
        let (u, v) = (NodeId::from("u"), NodeId::from("v"));
        let up = derive_capacity(&u, &v, BalancePair { balance: 5, target: 8 }).unwrap();
        assert_eq!((up.from.as_str(), up.to.as_str(), up.capacity), ("u", "v", 3));
        let down = derive_capacity(&u, &v, BalancePair { balance: 8, target: 5 }).unwrap();
        assert_eq!((down.from.as_str(), down.to.as_str(), down.capacity), ("v", "u", 3));
        assert!(derive_capacity(&u, &v, BalancePair { balance: 5, target: 5 }).is_none());
    }

    #[test]
    fn triangle_is_valid() {
        let inst = build_instance(
            ids(&["A", "B", "C"]),
            vec![
                ChannelConstraint::new("A", "B", 4),
                ChannelConstraint::new("B", "C", 4),
                ChannelConstraint::new("C", "A", 4),
            ],
        )
        .unwrap();
        assert_eq!(inst.node_count(), 3);
        assert_eq!(inst.edge_count(), 3);
    }

    #[test]
    fn structural_errors() {
        let nodes = ids(&["A", "B"]);
        let anti = build_instance(
            nodes.clone(),
            vec![ChannelConstraint::new("A", "B", 4), ChannelConstraint::new("B", "A", 2)],
        );
        assert!(matches!(anti, Err(ModelError::AntiparallelConflict { .. })));

        let self_loop = build_instance(nodes.clone(), vec![ChannelConstraint::new("A", "A", 1)]);
        assert!(matches!(self_loop, Err(ModelError::SelfLoop(_))));

        let dup = build_instance(
            nodes.clone(),
            vec![ChannelConstraint::new("A", "B", 1), ChannelConstraint::new("A", "B", 2)],
        );
        assert!(matches!(dup, Err(ModelError::DuplicateEdge { .. })));

        let unknown = build_instance(nodes.clone(), vec![ChannelConstraint::new("A", "Z", 1)]);
        assert!(matches!(unknown, Err(ModelError::UnknownEndpoint { .. })));

        let over = RebalancingInstance::new(
            nodes.clone(),
            vec![ChannelConstraint::new("A", "B", 6)],
            Bounds { capacity_bound: 5, weight_bound: 1 },
        );
        assert!(matches!(over, Err(ModelError::CapacityOverflow { .. })));

        let heavy = build_instance(nodes, vec![ChannelConstraint::new("A", "B", 1).with_weight(2)]);
        assert!(matches!(heavy, Err(ModelError::WeightOverflow { .. })));
    }

    #[test]
    fn zero_capacity_edges_are_dropped_and_do_not_conflict() {
        let inst = build_instance(
            ids(&["A", "B"]),
            vec![ChannelConstraint::new("A", "B", 0), ChannelConstraint::new("B", "A", 2)],
        )
        .unwrap();
        assert_eq!(inst.edge_count(), 1);
        assert_eq!(inst.edges()[0].from.as_str(), "B");
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let bad = r#"{"nodes":["A"],"edges":[],"weight_bound":1,"capacity_bound":4,"extra":1}"#;
        assert!(matches!(RebalancingInstance::from_json(bad), Err(ModelError::Json(_))));
        let bad_edge = r#"{"nodes":["A","B"],"edges":[{"from":"A","to":"B","capacity":1,"fee":2}]}"#;
        assert!(RebalancingInstance::from_json(bad_edge).is_err());
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let text = r#"{"nodes":["C","A","B"],"edges":[
            {"from":"C","to":"A","capacity":4},
            {"from":"A","to":"B","capacity":4,"weight":1},
            {"from":"B","to":"C","capacity":4}],"weight_bound":1,"capacity_bound":8}"#;
        let inst = RebalancingInstance::from_json(text).unwrap();
        let again = RebalancingInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, again);
        assert_eq!(inst.nodes()[0].as_str(), "A");
        assert_eq!(inst.edge_index(&"B".into(), &"C".into()), Some(1));
    }

    #[test]
    fn modulus_guard() {
        let r = RebalancingInstance::new(
            ids(&["A", "B"]),
            vec![ChannelConstraint::new("A", "B", 1)],
            Bounds { capacity_bound: 1 << 40, weight_bound: 1 << 30 },
        );
        assert!(matches!(r, Err(ModelError::ModulusOverflow { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn constraint_list() -> impl Strategy<Value = Vec<ChannelConstraint>> {
            // Unordered pairs over 5 nodes with a random orientation each.
            proptest::collection::btree_map((0usize..5, 0usize..5), (any::<bool>(), 0u64..6), 0..8)
                .prop_map(|pairs| {
                    pairs
                        .into_iter()
                        .filter(|((a, b), _)| a < b)
                        .map(|((a, b), (flip, cap))| {
                            let (f, t) = if flip { (b, a) } else { (a, b) };
                            ChannelConstraint::new(format!("n{f}"), format!("n{t}"), cap)
                        })
                        .collect()
                })
        }

        proptest! {
            #[test]
            fn permutation_invariant(list in constraint_list(), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let nodes: Vec<NodeId> = (0..5).map(|i| NodeId::new(format!("n{i}"))).collect();
                let a = build_instance(nodes.clone(), list.clone()).unwrap();
                let mut shuffled = list.clone();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                shuffled.shuffle(&mut rng);
                let mut shuffled_nodes = nodes.clone();
                shuffled_nodes.shuffle(&mut rng);
                let b = build_instance(shuffled_nodes, shuffled).unwrap();
                prop_assert_eq!(&a, &b);
                let again = RebalancingInstance::new(a.nodes().to_vec(), a.edges().to_vec(), a.bounds()).unwrap();
                prop_assert_eq!(a, again);
            }

            #[test]
            fn derived_edges_never_conflict(balance in 0u64..100, target in 0u64..100) {
                let (u, v) = (NodeId::from("u"), NodeId::from("v"));
                let edges: Vec<_> = derive_capacity(&u, &v, BalancePair { balance, target }).into_iter().collect();
                prop_assert!(edges.len() <= 1);
                prop_assert!(build_instance(vec![u, v], edges).is_ok());
            }
        }
    }
}
