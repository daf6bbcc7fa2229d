//! Exhaustive reference solvers for small instances.
//!
//! These enumerate integral flow vectors arc by arc and share no code with the
//! solver module, so they can serve as an independent check of it. Keep inputs
//! small: the search is exponential in the number of arcs.

use crate::model::RebalancingInstance;

/// Shape limits under which the exhaustive oracle is considered cheap.
pub const ORACLE_MAX_EDGES: usize = 10;
pub const ORACLE_MAX_CAPACITY: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleArc {
    pub from: usize,
    pub to: usize,
    pub capacity: u64,
    /// Gain per unit of flow; the oracle maximizes the total gain.
    pub value: i64,
}

/// Best integral flow found by enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSolution {
    pub value: i64,
    pub flows: Vec<u64>,
}

/// Maximizes `sum(value * flow)` over integral flows with
/// `outflow(v) - inflow(v) == net_out[v]` and `0 <= flow <= capacity`.
/// Returns `None` when no flow satisfies the node constraints.
pub fn exhaustive_max_flow_value(
    node_count: usize,
    arcs: &[OracleArc],
    net_out: &[i64],
) -> Option<OracleSolution> {
    assert_eq!(net_out.len(), node_count);
    let m = arcs.len();
    // remaining_out[i][v]: capacity of arcs i.. leaving v; likewise for in.
    let mut remaining_out = vec![vec![0i64; node_count]; m + 1];
    let mut remaining_in = vec![vec![0i64; node_count]; m + 1];
    let mut optimistic = vec![0i64; m + 1];
    for i in (0..m).rev() {
        remaining_out[i] = remaining_out[i + 1].clone();
        remaining_in[i] = remaining_in[i + 1].clone();
        remaining_out[i][arcs[i].from] += arcs[i].capacity as i64;
        remaining_in[i][arcs[i].to] += arcs[i].capacity as i64;
        optimistic[i] = optimistic[i + 1] + arcs[i].value.max(0) * arcs[i].capacity as i64;
    }
    // Nodes untouched by any arc must already balance.
    if (0..node_count).any(|v| remaining_out[0][v] == 0 && remaining_in[0][v] == 0 && net_out[v] != 0) {
        return None;
    }

    struct Search<'a> {
        arcs: &'a [OracleArc],
        net_out: &'a [i64],
        remaining_out: Vec<Vec<i64>>,
        remaining_in: Vec<Vec<i64>>,
        optimistic: Vec<i64>,
        balance: Vec<i64>,
        flows: Vec<u64>,
        best: Option<OracleSolution>,
    }

    impl Search<'_> {
        fn feasible_after(&self, next: usize, v: usize) -> bool {
            let need = self.net_out[v] - self.balance[v];
            need <= self.remaining_out[next][v] && -need <= self.remaining_in[next][v]
        }

        fn go(&mut self, i: usize, value: i64) {
            if let Some(best) = &self.best {
                if value + self.optimistic[i] <= best.value {
                    return;
                }
            }
            if i == self.arcs.len() {
                // Every node was checked when its last arc was fixed.
                self.best = Some(OracleSolution {
                    value,
                    flows: self.flows.clone(),
                });
                return;
            }
            let arc = self.arcs[i];
            // Try large flows first so good incumbents appear early.
            for f in (0..=arc.capacity).rev() {
                let fi = f as i64;
                self.balance[arc.from] += fi;
                self.balance[arc.to] -= fi;
                if self.feasible_after(i + 1, arc.from) && self.feasible_after(i + 1, arc.to) {
                    self.flows[i] = f;
                    self.go(i + 1, value + arc.value * fi);
                }
                self.balance[arc.from] -= fi;
                self.balance[arc.to] += fi;
            }
            self.flows[i] = 0;
        }
    }

    let mut search = Search {
        arcs,
        net_out,
        remaining_out,
        remaining_in,
        optimistic,
        balance: vec![0; node_count],
        flows: vec![0; m],
        best: None,
    };
    search.go(0, 0);
    search.best
}

/// Maximum of `sum(w * f)` over all integral circulations of the instance.
pub fn best_circulation(instance: &RebalancingInstance) -> OracleSolution {
    let arcs: Vec<OracleArc> = instance
        .edges()
        .iter()
        .zip(instance.endpoints())
        .map(|(e, &(from, to))| OracleArc {
            from,
            to,
            capacity: e.capacity,
            value: e.weight as i64,
        })
        .collect();
    let net = vec![0; instance.node_count()];
    exhaustive_max_flow_value(instance.node_count(), &arcs, &net)
        .expect("the zero circulation is always feasible")
}

/// Whether the instance is small enough for [`best_circulation`].
pub fn oracle_applicable(instance: &RebalancingInstance) -> bool {
    instance.edge_count() <= ORACLE_MAX_EDGES && instance.max_capacity() <= ORACLE_MAX_CAPACITY
}

/// All simple directed cycles, as node-index sequences starting at their
/// smallest index.
pub fn simple_cycles(instance: &RebalancingInstance) -> Vec<Vec<usize>> {
    let n = instance.node_count();
    let mut adj = vec![Vec::new(); n];
    for &(from, to) in instance.endpoints() {
        adj[from].push(to);
    }
    let mut out = Vec::new();
    for start in 0..n {
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        extend(start, &adj, &mut path, &mut on_path, &mut out);
    }
    return out;

    fn extend(
        start: usize,
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *path.last().unwrap();
        for &next in &adj[last] {
            if next == start {
                out.push(path.clone());
            } else if next > start && !on_path[next] {
                on_path[next] = true;
                path.push(next);
                extend(start, adj, path, on_path, out);
                path.pop();
                on_path[next] = false;
            }
        }
    }
}

/// Objective of the best circulation supported on a single simple cycle,
/// together with that cycle and its weight. `None` for acyclic instances.
pub fn best_single_cycle(instance: &RebalancingInstance) -> Option<(u64, Vec<usize>, u64)> {
    let mut best: Option<(u64, Vec<usize>, u64)> = None;
    for cycle in simple_cycles(instance) {
        let mut bottleneck = u64::MAX;
        let mut weight_sum = 0;
        for (i, &u) in cycle.iter().enumerate() {
            let v = cycle[(i + 1) % cycle.len()];
            let e = instance
                .edge_index(&instance.nodes()[u], &instance.nodes()[v])
                .expect("cycle edges exist");
            bottleneck = bottleneck.min(instance.edges()[e].capacity);
            weight_sum += instance.edges()[e].weight;
        }
        let objective = bottleneck * weight_sum;
        if best.as_ref().is_none_or(|b| objective > b.0) {
            best = Some((objective, cycle, bottleneck));
        }
    }
    best
}
