//! Successive shortest paths with node potentials.
//!
//! All arc costs are non-negative, so zero potentials are valid at the start
//! and Dijkstra keeps reduced costs non-negative after every augmentation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::reduction::MinCostFlowProblem;
use super::SolveError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinCostFlowSolution {
    /// Flow per arc, aligned with [`MinCostFlowProblem::arcs`].
    pub arc_flow: Vec<u64>,
    pub cost: u64,
    /// Number of augmenting paths used.
    pub iterations: usize,
}

struct Residual {
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn build(problem: &MinCostFlowProblem) -> Self {
        let nodes = problem.node_count() + 2;
        let arcs = problem.arcs();
        let mut r = Residual {
            to: Vec::with_capacity(2 * arcs.len()),
            cap: Vec::with_capacity(2 * arcs.len()),
            cost: Vec::with_capacity(2 * arcs.len()),
            adj: vec![Vec::new(); nodes],
        };
        for a in arcs {
            r.adj[a.from].push(r.to.len());
            r.to.push(a.to);
            r.cap.push(a.capacity as i64);
            r.cost.push(a.cost as i64);
            r.adj[a.to].push(r.to.len());
            r.to.push(a.from);
            r.cap.push(0);
            r.cost.push(-(a.cost as i64));
        }
        r
    }
}

pub fn solve_min_cost_flow(problem: &MinCostFlowProblem) -> Result<MinCostFlowSolution, SolveError> {
    let imbalance: i64 = problem.supplies().iter().sum();
    if imbalance != 0 {
        return Err(SolveError::MalformedProblem(format!(
            "supplies sum to {imbalance}, expected 0"
        )));
    }
    if let Some(a) = problem.arcs().iter().find(|a| a.capacity > i64::MAX as u64 / 4) {
        return Err(SolveError::MalformedProblem(format!(
            "arc {}->{} capacity {} too large",
            a.from, a.to, a.capacity
        )));
    }

    let mut res = Residual::build(problem);
    let nodes = problem.node_count() + 2;
    let (source, sink) = (problem.super_source(), problem.super_sink());
    let mut potential = vec![0i64; nodes];
    let mut dist = vec![i64::MAX; nodes];
    let mut pred_arc = vec![usize::MAX; nodes];
    let mut iterations = 0;

    loop {
        dist.fill(i64::MAX);
        pred_arc.fill(usize::MAX);
        dist[source] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &a in &res.adj[u] {
                if res.cap[a] == 0 {
                    continue;
                }
                let v = res.to[a];
                let nd = d + res.cost[a] + potential[u] - potential[v];
                if nd < dist[v] {
                    dist[v] = nd;
                    pred_arc[v] = a;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        if dist[sink] == i64::MAX {
            break;
        }
        for v in 0..nodes {
            if dist[v] != i64::MAX {
                potential[v] += dist[v];
            }
        }

        let mut push = i64::MAX;
        let mut v = sink;
        while v != source {
            let a = pred_arc[v];
            push = push.min(res.cap[a]);
            v = res.to[a ^ 1];
        }
        let mut v = sink;
        while v != source {
            let a = pred_arc[v];
            res.cap[a] -= push;
            res.cap[a ^ 1] += push;
            v = res.to[a ^ 1];
        }
        iterations += 1;
    }

    let arc_flow: Vec<u64> = problem
        .arcs()
        .iter()
        .enumerate()
        .map(|(i, _)| res.cap[2 * i + 1] as u64)
        .collect();
    let cost = problem
        .arcs()
        .iter()
        .zip(&arc_flow)
        .map(|(a, &f)| a.cost * f)
        .sum();
    Ok(MinCostFlowSolution { arc_flow, cost, iterations })
}
