//! Decomposition of a circulation into sign-consistent cycle flows.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeId, RebalancingInstance};
use crate::solver::{circulation_violations, Circulation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycleError {
    #[error("not a circulation: {0}")]
    InvalidCirculation(String),
    #[error("invalid decomposition json: {0}")]
    Json(String),
}

/// A uniform flow of `weight` around the simple cycle
/// `vertices[0] -> vertices[1] -> ... -> vertices[0]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleFlow {
    pub vertices: Vec<NodeId>,
    pub weight: u64,
}

impl CycleFlow {
    pub fn new(vertices: Vec<NodeId>, weight: u64) -> Self {
        CycleFlow { vertices, weight }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Consecutive `(from, to)` pairs, closing back to the first vertex.
    pub fn hops(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        let k = self.vertices.len();
        (0..k).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % k]))
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.vertices.contains(node)
    }

    /// Rotates so the smallest node identifier leads.
    fn canonicalize(&mut self) {
        if let Some(pos) = self.vertices.iter().enumerate().min_by_key(|(_, v)| *v).map(|(i, _)| i) {
            self.vertices.rotate_left(pos);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub cycles: Vec<CycleFlow>,
    pub source: Circulation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecompositionFile {
    cycles: Vec<CycleFlow>,
}

/// Splits a circulation into cycle flows that sum to it edge by edge.
///
/// The first active edge in canonical order seeds each search; a depth-first
/// search through active edges closes the cycle, the cycle carries the
/// smallest remaining flow on it, and at least one edge drops out per round.
pub fn decompose(circulation: &Circulation) -> Result<Decomposition, CycleError> {
    let instance = circulation.instance();
    let violations = circulation_violations(instance, circulation.flows());
    if let Some(v) = violations.first() {
        return Err(CycleError::InvalidCirculation(v.to_string()));
    }

    let n = instance.node_count();
    let ends = instance.endpoints();
    let mut remaining = circulation.flows().to_vec();
    // Outgoing edges per node, in canonical edge order; only the support.
    let mut out_edges = vec![Vec::new(); n];
    for (e, &(u, _)) in ends.iter().enumerate() {
        if remaining[e] > 0 {
            out_edges[u].push(e);
        }
    }
    // Edges before first_live[u] in out_edges[u] are exhausted for good.
    let mut first_live = vec![0usize; n];
    let mut visit_stamp = vec![0usize; n];
    let mut stamp = 0;
    let mut cycles = Vec::new();

    for seed in 0..ends.len() {
        while remaining[seed] > 0 {
            let (start, head) = ends[seed];
            stamp += 1;
            let path = find_path(head, start, &out_edges, &mut first_live, &remaining, ends, &mut visit_stamp, stamp)
                .ok_or_else(|| {
                    CycleError::InvalidCirculation(format!(
                        "edge {}->{} lies on no active cycle",
                        instance.nodes()[start],
                        instance.nodes()[head]
                    ))
                })?;
            let mut cycle_edges = Vec::with_capacity(path.len() + 1);
            cycle_edges.push(seed);
            cycle_edges.extend(path);
            let weight = cycle_edges.iter().map(|&e| remaining[e]).min().expect("non-empty cycle");
            for &e in &cycle_edges {
                remaining[e] -= weight;
            }
            let mut flow = CycleFlow::new(
                cycle_edges.iter().map(|&e| instance.nodes()[ends[e].0].clone()).collect(),
                weight,
            );
            flow.canonicalize();
            cycles.push(flow);
        }
    }

    Ok(Decomposition { cycles, source: circulation.clone() })
}

/// Iterative DFS over active edges from `from` to `to`; returns the edge path.
#[allow(clippy::too_many_arguments)]
fn find_path(
    from: usize,
    to: usize,
    out_edges: &[Vec<usize>],
    first_live: &mut [usize],
    remaining: &[u64],
    ends: &[(usize, usize)],
    visit_stamp: &mut [usize],
    stamp: usize,
) -> Option<Vec<usize>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut stack: Vec<(usize, usize)> = vec![(from, 0)];
    let mut path: Vec<usize> = Vec::new();
    visit_stamp[from] = stamp;
    while let Some(&(node, cursor)) = stack.last() {
        let adj = &out_edges[node];
        while first_live[node] < adj.len() && remaining[adj[first_live[node]]] == 0 {
            first_live[node] += 1;
        }
        let mut i = cursor.max(first_live[node]);
        let mut descend = None;
        while i < adj.len() {
            let e = adj[i];
            i += 1;
            if remaining[e] == 0 {
                continue;
            }
            let next = ends[e].1;
            if next == to {
                path.push(e);
                return Some(path);
            }
            if visit_stamp[next] != stamp {
                descend = Some((e, next));
                break;
            }
        }
        match descend {
            Some((e, next)) => {
                visit_stamp[next] = stamp;
                stack.last_mut().expect("non-empty").1 = i;
                path.push(e);
                stack.push((next, 0));
            }
            None => {
                stack.pop();
                path.pop();
            }
        }
    }
    None
}

/// Every reason `d` fails to be a valid decomposition of its source.
pub fn decomposition_problems(d: &Decomposition) -> Vec<String> {
    let instance = d.source.instance();
    let mut problems = Vec::new();
    let mut sum = vec![0u64; instance.edge_count()];
    if d.cycles.len() > instance.edge_count() {
        problems.push(format!("{} cycles exceed edge count {}", d.cycles.len(), instance.edge_count()));
    }
    for (i, c) in d.cycles.iter().enumerate() {
        if c.weight == 0 {
            problems.push(format!("cycle {i} has zero weight"));
        }
        if c.len() < 2 {
            problems.push(format!("cycle {i} has fewer than two vertices"));
        }
        let mut sorted = c.vertices.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != c.len() {
            problems.push(format!("cycle {i} repeats a vertex"));
        }
        for (u, v) in c.hops() {
            match instance.edge_index(u, v) {
                Some(e) if d.source.flows()[e] > 0 => sum[e] += c.weight,
                _ => problems.push(format!("cycle {i} uses {u}->{v}, which carries no flow in that direction")),
            }
        }
    }
    for (e, (&s, &f)) in sum.iter().zip(d.source.flows()).enumerate() {
        if s != f {
            let edge = &instance.edges()[e];
            problems.push(format!("edge {}->{}: cycles sum to {s}, circulation has {f}", edge.from, edge.to));
        }
    }
    problems
}

pub fn validate_decomposition(d: &Decomposition) -> bool {
    decomposition_problems(d).is_empty()
}

/// Parses a `{"cycles": [...]}` document.
pub fn parse_cycles(text: &str) -> Result<Vec<CycleFlow>, CycleError> {
    let file: DecompositionFile = serde_json::from_str(text).map_err(|e| CycleError::Json(e.to_string()))?;
    Ok(file.cycles)
}

impl Decomposition {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DecompositionFile { cycles: self.cycles.clone() })
            .expect("decomposition serializes")
    }

    /// Parses cycles for a known source circulation. Structural validity is
    /// left to [`validate_decomposition`].
    pub fn from_json(source: &Circulation, text: &str) -> Result<Self, CycleError> {
        let file: DecompositionFile = serde_json::from_str(text).map_err(|e| CycleError::Json(e.to_string()))?;
        Ok(Decomposition { cycles: file.cycles, source: source.clone() })
    }

    /// Rebuilds a decomposition from cycles alone, taking their edgewise sum
    /// as the source circulation.
    pub fn from_cycles(instance: &RebalancingInstance, cycles: Vec<CycleFlow>) -> Result<Self, CycleError> {
        let mut flows = vec![0u64; instance.edge_count()];
        for c in &cycles {
            for (u, v) in c.hops() {
                let e = instance
                    .edge_index(u, v)
                    .ok_or_else(|| CycleError::InvalidCirculation(format!("{u}->{v} is not an instance edge")))?;
                flows[e] = flows[e].saturating_add(c.weight);
            }
        }
        let source = Circulation::new(instance, flows).map_err(|v| CycleError::InvalidCirculation(v.to_string()))?;
        Ok(Decomposition { cycles, source })
    }

    /// Graphviz rendering: circulation edges labelled with their flow, and one
    /// coloured overlay edge per cycle hop.
    pub fn to_dot(&self) -> String {
        const PALETTE: [&str; 8] =
            ["red", "blue", "darkgreen", "orange", "purple", "brown", "deeppink", "teal"];
        let instance = self.source.instance();
        let mut out = String::from("digraph circulation {\n  rankdir=LR;\n");
        for node in instance.nodes() {
            let _ = writeln!(out, "  \"{node}\";");
        }
        for (e, &f) in instance.edges().iter().zip(self.source.flows()) {
            let style = if f == 0 { "dashed" } else { "solid" };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}/{}\", style={style}, color=gray];",
                e.from, e.to, f, e.capacity
            );
        }
        for (i, c) in self.cycles.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            for (u, v) in c.hops() {
                let _ = writeln!(
                    out,
                    "  \"{u}\" -> \"{v}\" [label=\"c{i}:{}\", color={color}, fontcolor={color}];",
                    c.weight
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Circulation support statistics `(n', m')`: nodes and edges with flow.
pub fn support_size(instance: &RebalancingInstance, flows: &[u64]) -> (usize, usize) {
    let mut touched = vec![false; instance.node_count()];
    let mut edges = 0;
    for (&(u, v), &f) in instance.endpoints().iter().zip(flows) {
        if f > 0 {
            touched[u] = true;
            touched[v] = true;
            edges += 1;
        }
    }
    (touched.iter().filter(|&&t| t).count(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_instance, ChannelConstraint};
    use crate::solver::solve_rebalancing;

    fn instance(edges: &[(&str, &str, u64)]) -> RebalancingInstance {
        let mut nodes: Vec<NodeId> = edges.iter().flat_map(|e| [e.0.into(), e.1.into()]).collect();
        nodes.sort();
        nodes.dedup();
        build_instance(nodes, edges.iter().map(|&(a, b, c)| ChannelConstraint::new(a, b, c))).unwrap()
    }

    #[test]
    fn zero_circulation_has_no_cycles() {
        let inst = instance(&[("A", "B", 4), ("B", "C", 4), ("C", "A", 4)]);
        let d = decompose(&Circulation::zero(&inst)).unwrap();
        assert!(d.cycles.is_empty());
        assert!(validate_decomposition(&d));
    }

    #[test]
    fn triangle_is_one_cycle() {
        let inst = instance(&[("A", "B", 4), ("B", "C", 4), ("C", "A", 4)]);
        let circ = Circulation::new(&inst, vec![4, 4, 4]).unwrap();
        let d = decompose(&circ).unwrap();
        assert_eq!(d.cycles, vec![CycleFlow::new(vec!["A".into(), "B".into(), "C".into()], 4)]);
        assert_eq!(
            serde_json::to_string(&serde_json::from_str::<serde_json::Value>(&d.to_json()).unwrap()).unwrap(),
            r#"{"cycles":[{"vertices":["A","B","C"],"weight":4}]}"#
        );
    }

    #[test]
    fn figure_eight_splits_in_two() {
        // (A,B,C) with 3 superposed on (A,D,E) with 2.
        let inst = instance(&[("A", "B", 5), ("B", "C", 5), ("C", "A", 5), ("A", "D", 5), ("D", "E", 5), ("E", "A", 5)]);
        let mut flows = vec![0; inst.edge_count()];
        for (a, b, f) in [("A", "B", 3), ("B", "C", 3), ("C", "A", 3), ("A", "D", 2), ("D", "E", 2), ("E", "A", 2)] {
            flows[inst.edge_index(&a.into(), &b.into()).unwrap()] = f;
        }
        let d = decompose(&Circulation::new(&inst, flows).unwrap()).unwrap();
        let mut weights: Vec<u64> = d.cycles.iter().map(|c| c.weight).collect();
        weights.sort();
        assert_eq!(weights, vec![2, 3]);
        assert!(validate_decomposition(&d));
    }

    #[test]
    fn tampering_is_detected() {
        let inst = instance(&[("A", "B", 4), ("B", "C", 4), ("C", "A", 4)]);
        let d = decompose(&Circulation::new(&inst, vec![4, 4, 4]).unwrap()).unwrap();
        let mut heavier = d.clone();
        heavier.cycles[0].weight += 1;
        assert!(!validate_decomposition(&heavier));
        let mut repeated = d.clone();
        repeated.cycles[0].vertices = vec!["A".into(), "B".into(), "A".into(), "C".into()];
        assert!(!validate_decomposition(&repeated));
        let mut reversed = d;
        reversed.cycles[0].vertices.reverse();
        assert!(!validate_decomposition(&reversed));
    }

    #[test]
    fn dot_mentions_every_cycle() {
        let inst = instance(&[("A", "B", 4), ("B", "C", 4), ("C", "A", 4)]);
        let r = solve_rebalancing(&inst, None).unwrap();
        let dot = decompose(&r.circulation).unwrap().to_dot();
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("c0:4").count(), 3);
    }

    mod props {
        use super::*;
        use crate::model::{Bounds, RebalancingInstance};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]
            #[test]
            fn optimal_circulations_decompose(
                n in 3usize..=8,
                raw in proptest::collection::vec((0usize..8, 0usize..8, 1u64..=9), 0..=20),
            ) {
                let nodes: Vec<NodeId> = (0..n).map(|i| NodeId::new(format!("v{i}"))).collect();
                let mut used = std::collections::BTreeSet::new();
                let edges: Vec<_> = raw
                    .into_iter()
                    .map(|(a, b, c)| (a % n, b % n, c))
                    .filter(|&(a, b, _)| a != b && used.insert((a.min(b), a.max(b))))
                    .map(|(a, b, c)| ChannelConstraint::new(nodes[a].clone(), nodes[b].clone(), c))
                    .collect();
                let inst = RebalancingInstance::new(nodes, edges, Bounds { capacity_bound: 9, weight_bound: 1 }).unwrap();
                let circ = solve_rebalancing(&inst, None).unwrap().circulation;
                let d = decompose(&circ).unwrap();
                prop_assert!(validate_decomposition(&d), "{:?}", decomposition_problems(&d));
                for c in &d.cycles {
                    prop_assert_eq!(&c.vertices[0], c.vertices.iter().min().unwrap());
                }
            }
        }
    }
}
