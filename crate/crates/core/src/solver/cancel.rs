//! Primal cycle cancelling on the original graph.
//!
//! Starts from the zero circulation and repeatedly augments along a
//! positive-gain residual cycle found by Bellman-Ford. Every intermediate
//! state is a feasible circulation and each iteration strictly raises the
//! objective, which is what bounded runs need.

use super::SolveError;
use crate::model::RebalancingInstance;

pub(crate) struct CancelOutcome {
    pub flows: Vec<u64>,
    pub iterations: usize,
    /// True when the iteration bound stopped the search before optimality
    /// was established.
    pub terminated_early: bool,
}

/// Residual arc `2e` pushes along edge `e`, arc `2e + 1` pushes back.
fn residual_arc(instance: &RebalancingInstance, flows: &[u64], arc: usize) -> (usize, usize, u64, i64) {
    let e = arc / 2;
    let (u, v) = instance.endpoints()[e];
    let edge = &instance.edges()[e];
    if arc.is_multiple_of(2) {
        (u, v, edge.capacity - flows[e], -(edge.weight as i64))
    } else {
        (v, u, flows[e], edge.weight as i64)
    }
}

/// Finds a negative-cost residual cycle as a list of residual arcs.
fn negative_cycle(instance: &RebalancingInstance, flows: &[u64]) -> Option<Vec<usize>> {
    let n = instance.node_count();
    let arcs = 2 * instance.edge_count();
    let mut dist = vec![0i64; n];
    let mut pred = vec![usize::MAX; n];
    let mut last_updated = None;
    for _pass in 0..n {
        last_updated = None;
        for a in 0..arcs {
            let (u, v, cap, cost) = residual_arc(instance, flows, a);
            if cap > 0 && dist[u] + cost < dist[v] {
                dist[v] = dist[u] + cost;
                pred[v] = a;
                last_updated = Some(v);
            }
        }
        last_updated?;
    }
    let mut x = last_updated?;
    for _ in 0..n {
        if pred[x] == usize::MAX {
            return None;
        }
        x = residual_arc(instance, flows, pred[x]).0;
    }
    let mut cycle = Vec::new();
    let mut v = x;
    loop {
        let a = pred[v];
        cycle.push(a);
        v = residual_arc(instance, flows, a).0;
        if v == x {
            break;
        }
    }
    cycle.reverse();
    Some(cycle)
}

pub(crate) fn cancel_cycles(
    instance: &RebalancingInstance,
    iteration_bound: Option<usize>,
) -> Result<CancelOutcome, SolveError> {
    let mut flows = vec![0u64; instance.edge_count()];
    let mut iterations = 0;
    loop {
        let Some(cycle) = negative_cycle(instance, &flows) else {
            return Ok(CancelOutcome { flows, iterations, terminated_early: false });
        };
        if iteration_bound.is_some_and(|b| iterations >= b) {
            return Ok(CancelOutcome { flows, iterations, terminated_early: true });
        }
        let mut cost = 0;
        let mut push = u64::MAX;
        for &a in &cycle {
            let (_, _, cap, c) = residual_arc(instance, &flows, a);
            cost += c;
            push = push.min(cap);
        }
        if cost >= 0 || push == 0 {
            return Err(SolveError::InternalInconsistency(format!(
                "residual cycle with cost {cost} and bottleneck {push}"
            )));
        }
        for &a in &cycle {
            if a % 2 == 0 {
                flows[a / 2] += push;
            } else {
                flows[a / 2] -= push;
            }
        }
        iterations += 1;
    }
}
