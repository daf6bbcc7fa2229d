//! Optimal rebalancing: the max-weight circulation problem, solved exactly in
//! integers through a min-cost flow reduction.

mod cancel;
pub mod reduction;
pub mod ssp;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, NodeId, RebalancingInstance};

pub use reduction::{recover_circulation, reduce_to_min_cost_flow, FlowArc, MinCostFlowProblem};
pub use ssp::{solve_min_cost_flow, MinCostFlowSolution};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("malformed min-cost flow problem: {0}")]
    MalformedProblem(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid circulation json: {0}")]
    Json(String),
}

/// A way in which a flow vector fails to be a circulation of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CirculationViolation {
    Length { expected: usize, found: usize },
    Capacity { from: NodeId, to: NodeId, flow: u64, capacity: u64 },
    Conservation { node: NodeId, inflow: u64, outflow: u64 },
}

impl fmt::Display for CirculationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Length { expected, found } => {
                write!(f, "expected {expected} edge flows, found {found}")
            }
            Self::Capacity { from, to, flow, capacity } => {
                write!(f, "capacity violated on {from}->{to}: flow {flow} > {capacity}")
            }
            Self::Conservation { node, inflow, outflow } => {
                write!(f, "conservation violated at {node}: inflow {inflow} != outflow {outflow}")
            }
        }
    }
}

/// Every way `flows` fails to be a circulation of `instance`.
pub fn circulation_violations(instance: &RebalancingInstance, flows: &[u64]) -> Vec<CirculationViolation> {
    if flows.len() != instance.edge_count() {
        return vec![CirculationViolation::Length {
            expected: instance.edge_count(),
            found: flows.len(),
        }];
    }
    let mut out = Vec::new();
    let mut inflow = vec![0u64; instance.node_count()];
    let mut outflow = vec![0u64; instance.node_count()];
    for ((edge, &(u, v)), &f) in instance.edges().iter().zip(instance.endpoints()).zip(flows) {
        if f > edge.capacity {
            out.push(CirculationViolation::Capacity {
                from: edge.from.clone(),
                to: edge.to.clone(),
                flow: f,
                capacity: edge.capacity,
            });
        }
        outflow[u] += f;
        inflow[v] += f;
    }
    for (i, node) in instance.nodes().iter().enumerate() {
        if inflow[i] != outflow[i] {
            out.push(CirculationViolation::Conservation {
                node: node.clone(),
                inflow: inflow[i],
                outflow: outflow[i],
            });
        }
    }
    out
}

/// An integral circulation on an instance: conservation at every node and
/// `0 <= f(e) <= m(e)` on every edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circulation {
    instance: RebalancingInstance,
    flows: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEntry {
    pub from: NodeId,
    pub to: NodeId,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirculationFile {
    pub flows: Vec<FlowEntry>,
    pub objective: u64,
}

impl CirculationFile {
    /// Flow vector aligned with the instance edges; edges missing from the
    /// file carry zero. Entries naming a non-edge are an error.
    pub fn edge_flows(&self, instance: &RebalancingInstance) -> Result<Vec<u64>, SolveError> {
        let mut flows = vec![0u64; instance.edge_count()];
        let mut seen = vec![false; instance.edge_count()];
        for entry in &self.flows {
            let e = instance.edge_index(&entry.from, &entry.to).ok_or_else(|| {
                SolveError::Json(format!("flow on {}->{} which is not an instance edge", entry.from, entry.to))
            })?;
            if seen[e] {
                return Err(SolveError::Json(format!("duplicate flow entry {}->{}", entry.from, entry.to)));
            }
            seen[e] = true;
            flows[e] = entry.amount;
        }
        Ok(flows)
    }
}

impl Circulation {
    pub fn new(instance: &RebalancingInstance, flows: Vec<u64>) -> Result<Self, CirculationViolation> {
        if let Some(v) = circulation_violations(instance, &flows).into_iter().next() {
            return Err(v);
        }
        Ok(Circulation { instance: instance.clone(), flows })
    }

    pub fn zero(instance: &RebalancingInstance) -> Self {
        Circulation { instance: instance.clone(), flows: vec![0; instance.edge_count()] }
    }

    pub fn instance(&self) -> &RebalancingInstance {
        &self.instance
    }

    /// Flow per edge, aligned with the instance edges.
    pub fn flows(&self) -> &[u64] {
        &self.flows
    }

    pub fn flow(&self, from: &NodeId, to: &NodeId) -> u64 {
        self.instance.edge_index(from, to).map_or(0, |e| self.flows[e])
    }

    /// `sum(w(e) * f(e))`.
    pub fn objective(&self) -> u64 {
        objective_of(&self.instance, &self.flows)
    }

    pub fn is_zero(&self) -> bool {
        self.flows.iter().all(|&f| f == 0)
    }

    pub fn to_file(&self) -> CirculationFile {
        CirculationFile {
            flows: self
                .instance
                .edges()
                .iter()
                .zip(&self.flows)
                .map(|(e, &amount)| FlowEntry { from: e.from.clone(), to: e.to.clone(), amount })
                .collect(),
            objective: self.objective(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("circulation serializes")
    }

    pub fn from_json(instance: &RebalancingInstance, text: &str) -> Result<Self, SolveError> {
        let file: CirculationFile = serde_json::from_str(text).map_err(|e| SolveError::Json(e.to_string()))?;
        let flows = file.edge_flows(instance)?;
        Circulation::new(instance, flows).map_err(|v| SolveError::Json(v.to_string()))
    }
}

pub fn objective_of(instance: &RebalancingInstance, flows: &[u64]) -> u64 {
    instance.edges().iter().zip(flows).map(|(e, &f)| e.weight * f).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub circulation: Circulation,
    pub objective: u64,
    pub iterations: usize,
    pub terminated_early: bool,
}

/// Computes a circulation maximizing `sum(w * f)`.
///
/// Without a bound the min-cost flow reduction is solved to optimality and
/// `iterations` counts augmenting paths. With `iteration_bound = Some(k)` the
/// solver instead cancels at most `k` positive-gain cycles starting from the
/// zero circulation; the result is feasible at every `k` and its objective is
/// nondecreasing in `k`.
pub fn solve_rebalancing(
    instance: &RebalancingInstance,
    iteration_bound: Option<usize>,
) -> Result<SolveReport, SolveError> {
    let (circulation, iterations, terminated_early) = match iteration_bound {
        None => {
            let problem = reduce_to_min_cost_flow(instance);
            let solution = solve_min_cost_flow(&problem)?;
            let required = problem.required_flow();
            let shipped: u64 = problem
                .arcs()
                .iter()
                .zip(&solution.arc_flow)
                .filter(|(a, _)| a.from == problem.super_source())
                .map(|(_, &f)| f)
                .sum();
            if shipped != required {
                return Err(SolveError::InternalInconsistency(format!(
                    "reduced problem shipped {shipped} of {required} units"
                )));
            }
            let circulation = recover_circulation(&solution.arc_flow, instance)?;
            (circulation, solution.iterations, false)
        }
        Some(bound) => {
            let outcome = cancel::cancel_cycles(instance, Some(bound))?;
            let circulation = Circulation::new(instance, outcome.flows)
                .map_err(|v| SolveError::InternalInconsistency(v.to_string()))?;
            (circulation, outcome.iterations, outcome.terminated_early)
        }
    };
    Ok(SolveReport {
        objective: circulation.objective(),
        circulation,
        iterations,
        terminated_early,
    })
}
