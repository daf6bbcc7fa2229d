//! Change of variables from a max-weight circulation to a min-cost flow.
//!
//! Each edge `(u, v)` with capacity `m` and weight `w` becomes the reversed arc
//! `(v, u)` with the same capacity and cost `w`, carrying `f' = m - f`. The
//! all-zero circulation maps to `f' = m`, so the reduced problem is always
//! feasible.

use super::{Circulation, SolveError};
use crate::model::RebalancingInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: u64,
    pub cost: u64,
}

/// Min-cost flow problem over the participants plus a super source and a
/// super sink.
///
/// `supplies[v]` is `out_capacity(v) - in_capacity(v)` in the original
/// graph, which equals the net inflow node `v` must absorb in the reversed
/// graph. Nodes with negative supply are fed from the super source; nodes with
/// positive supply drain into the super sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinCostFlowProblem {
    node_count: usize,
    arcs: Vec<FlowArc>,
    reversed_arcs: usize,
    supplies: Vec<i64>,
}

impl MinCostFlowProblem {
    /// Assembles a problem from participant arcs and supplies, appending the
    /// super arcs. No validation happens here; the solver checks balance.
    pub fn new(node_count: usize, arcs: Vec<FlowArc>, supplies: Vec<i64>) -> Self {
        assert_eq!(supplies.len(), node_count);
        let reversed_arcs = arcs.len();
        let mut arcs = arcs;
        let source = node_count;
        let sink = node_count + 1;
        for (v, &b) in supplies.iter().enumerate() {
            if b < 0 {
                arcs.push(FlowArc { from: source, to: v, capacity: b.unsigned_abs(), cost: 0 });
            } else if b > 0 {
                arcs.push(FlowArc { from: v, to: sink, capacity: b as u64, cost: 0 });
            }
        }
        MinCostFlowProblem { node_count, arcs, reversed_arcs, supplies }
    }

    /// Participant count; the super nodes come after them.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn super_source(&self) -> usize {
        self.node_count
    }

    pub fn super_sink(&self) -> usize {
        self.node_count + 1
    }

    /// Reversed participant arcs first, aligned with instance edges, then
    /// super arcs.
    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    pub fn reversed_arcs(&self) -> &[FlowArc] {
        &self.arcs[..self.reversed_arcs]
    }

    pub fn supplies(&self) -> &[i64] {
        &self.supplies
    }

    /// Total capacity leaving the super source.
    pub fn required_flow(&self) -> u64 {
        self.arcs[self.reversed_arcs..]
            .iter()
            .filter(|a| a.from == self.super_source())
            .map(|a| a.capacity)
            .sum()
    }
}

pub fn reduce_to_min_cost_flow(instance: &RebalancingInstance) -> MinCostFlowProblem {
    let n = instance.node_count();
    let mut supplies = vec![0i64; n];
    let mut arcs = Vec::with_capacity(instance.edge_count());
    for (edge, &(u, v)) in instance.edges().iter().zip(instance.endpoints()) {
        arcs.push(FlowArc { from: v, to: u, capacity: edge.capacity, cost: edge.weight });
        supplies[u] += edge.capacity as i64;
        supplies[v] -= edge.capacity as i64;
    }
    MinCostFlowProblem::new(n, arcs, supplies)
}

/// Inverts the change of variables: `f(u, v) = m(u, v) - f'(v, u)`.
pub fn recover_circulation(
    arc_flow: &[u64],
    instance: &RebalancingInstance,
) -> Result<Circulation, SolveError> {
    if arc_flow.len() < instance.edge_count() {
        return Err(SolveError::InternalInconsistency(format!(
            "flow vector has {} entries for {} edges",
            arc_flow.len(),
            instance.edge_count()
        )));
    }
    let mut flows = Vec::with_capacity(instance.edge_count());
    for (edge, &reduced) in instance.edges().iter().zip(arc_flow) {
        let f = edge.capacity.checked_sub(reduced).ok_or_else(|| {
            SolveError::InternalInconsistency(format!(
                "reduced flow {reduced} exceeds capacity {} on {}->{}",
                edge.capacity, edge.from, edge.to
            ))
        })?;
        flows.push(f);
    }
    Circulation::new(instance, flows)
        .map_err(|v| SolveError::InternalInconsistency(v.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_instance, ChannelConstraint, NodeId};

    fn inst(edges: &[(&str, &str, u64)]) -> RebalancingInstance {
        let mut nodes: Vec<NodeId> = edges.iter().flat_map(|e| [e.0.into(), e.1.into()]).collect();
        nodes.sort();
        nodes.dedup();
        build_instance(nodes, edges.iter().map(|&(a, b, c)| ChannelConstraint::new(a, b, c))).unwrap()
    }

    #[test]
    fn single_edge_reverses() {
        let p = reduce_to_min_cost_flow(&inst(&[("A", "B", 3)]));
        assert_eq!(p.reversed_arcs(), &[FlowArc { from: 1, to: 0, capacity: 3, cost: 1 }]);
        assert_eq!(p.supplies(), &[3, -3]);
        assert_eq!(p.required_flow(), 3);
    }

    #[test]
    fn triangle_needs_no_super_arcs() {
        let p = reduce_to_min_cost_flow(&inst(&[("A", "B", 4), ("B", "C", 4), ("C", "A", 4)]));
        assert_eq!(p.supplies(), &[0, 0, 0]);
        assert_eq!(p.arcs().len(), 3);
    }

    #[test]
    fn path_supplies() {
        let p = reduce_to_min_cost_flow(&inst(&[("A", "B", 2), ("B", "C", 5)]));
        assert_eq!(p.supplies(), &[2, 3, -5]);
        assert_eq!(p.supplies().iter().sum::<i64>(), 0);
    }

    #[test]
    fn recover_inverts_substitution() {
        let single = inst(&[("A", "B", 3)]);
        assert_eq!(recover_circulation(&[3], &single).unwrap().flows(), &[0]);
        let tri = inst(&[("A", "B", 4), ("B", "C", 4), ("C", "A", 4)]);
        assert_eq!(recover_circulation(&[0, 0, 0], &tri).unwrap().flows(), &[4, 4, 4]);
        assert!(matches!(
            recover_circulation(&[0], &single),
            Err(SolveError::InternalInconsistency(_))
        ));
    }
}
