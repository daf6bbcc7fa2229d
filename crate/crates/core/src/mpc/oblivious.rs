//! Data-independent max-weight circulation over shared inputs.
//!
//! The instance is encoded as dense `n x n` capacity and weight matrices, so
//! the edge set stays hidden too. The solver keeps an antisymmetric net-flow
//! matrix `N` and runs a fixed number of cycle-cancelling iterations:
//!
//! 1. Bellman-Ford with a virtual zero source over all ordered pairs, with
//!    residual `C[i][j] - N[i][j]` and cost `W[j][i] - W[i][j]`; predecessor
//!    updates are oblivious selects.
//! 2. A vertex relaxed in the last pass is walked back `n` times to land on
//!    a predecessor cycle, which is then marked as a 0/1 arc matrix.
//! 3. The cycle is augmented by its bottleneck only if a relaxation happened
//!    in the last pass and the marked cycle has positive gain.
//!
//! Control flow depends on `n` and the iteration count alone, so the
//! transcript is identical for all instances of one public shape.

use super::abb::{Abb, Shared, Transcript};
use super::sharing::SharedVector;
use super::MpcError;
use crate::model::RebalancingInstance;

/// Everything about an instance that is public.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PublicShape {
    pub nodes: usize,
    pub edges: usize,
    pub capacity_bound: u64,
    pub weight_bound: u64,
}

impl PublicShape {
    pub fn of(instance: &RebalancingInstance) -> Self {
        PublicShape {
            nodes: instance.node_count(),
            edges: instance.edge_count(),
            capacity_bound: instance.bounds().capacity_bound,
            weight_bound: instance.bounds().weight_bound,
        }
    }

    pub fn encoded_len(&self) -> usize {
        2 * self.nodes * self.nodes
    }
}

/// Number of cancelling iterations, fixed in advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationSchedule {
    pub iterations: u64,
}

impl IterationSchedule {
    /// Every effective iteration raises the objective by at least one, and
    /// the objective never exceeds `m * U * W`.
    pub fn worst_case(shape: &PublicShape) -> Self {
        let bound = (shape.edges as u64)
            .saturating_mul(shape.capacity_bound)
            .saturating_mul(shape.weight_bound.max(1));
        IterationSchedule { iterations: bound }
    }

    pub fn fixed(iterations: u64) -> Self {
        IterationSchedule { iterations }
    }
}

/// Capacities then weights, each row-major over sorted node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedInstance {
    pub shape: PublicShape,
    pub data: SharedVector,
    /// Plaintext inputs, kept only to drive the shadow check.
    shadow: Option<Vec<i64>>,
}

impl SharedInstance {
    pub fn encode<R: rand::Rng + ?Sized>(
        instance: &RebalancingInstance,
        k: usize,
        rng: &mut R,
    ) -> Result<Self, MpcError> {
        if k < 2 {
            return Err(MpcError::KTooSmall(k));
        }
        let n = instance.node_count();
        let mut plain = vec![0i64; 2 * n * n];
        for (edge, &(u, v)) in instance.edges().iter().zip(instance.endpoints()) {
            plain[u * n + v] = edge.capacity as i64;
            plain[n * n + u * n + v] = edge.weight as i64;
        }
        Ok(SharedInstance {
            shape: PublicShape::of(instance),
            data: SharedVector::share_all(&plain, k, rng)?,
            shadow: None,
        })
    }

    /// Keeps the plaintext alongside the shares so a shadowed solve can check
    /// every intermediate value. Test and debug use only.
    pub fn with_shadow(mut self, instance: &RebalancingInstance) -> Self {
        let n = instance.node_count();
        let mut plain = vec![0i64; 2 * n * n];
        for (edge, &(u, v)) in instance.edges().iter().zip(instance.endpoints()) {
            plain[u * n + v] = edge.capacity as i64;
            plain[n * n + u * n + v] = edge.weight as i64;
        }
        self.shadow = Some(plain);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrivateSolveConfig {
    /// Seeds the dealer's randomness.
    pub seed: u64,
    /// Track plaintext values and fail on any modular wraparound.
    pub shadow: bool,
}

#[derive(Debug, Clone)]
pub struct PrivateSolveOutput {
    /// Shared antisymmetric net-flow matrix, row-major `n x n`.
    pub circulation: SharedVector,
    pub transcript: Transcript,
    pub messages: u64,
    /// Largest plaintext magnitude observed (shadow mode only).
    pub max_magnitude: i128,
}

pub fn private_solve(
    input: &SharedInstance,
    shape: &PublicShape,
    schedule: &IterationSchedule,
    config: &PrivateSolveConfig,
) -> Result<PrivateSolveOutput, MpcError> {
    if input.shape != *shape || input.data.len() != shape.encoded_len() {
        return Err(MpcError::ShapeMismatch(format!(
            "encoding of length {} for shape {:?}",
            input.data.len(),
            shape
        )));
    }
    let n = shape.nodes;
    let k = input.data.delegates();
    let mut abb = Abb::new(k, config.seed, config.shadow);
    let plain = |i: usize| input.shadow.as_ref().map(|p| p[i]);

    let cap: Vec<Shared> = (0..n * n).map(|i| abb.load(&input.data, i, plain(i))).collect();
    let weight: Vec<Shared> = (0..n * n).map(|i| abb.load(&input.data, n * n + i, plain(n * n + i))).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();

    // Gain of pushing one unit i -> j; the relaxation cost is its negation.
    let mut gain = vec![abb.constant(0); n * n];
    let mut cost = vec![abb.constant(0); n * n];
    for &(i, j) in &pairs {
        gain[i * n + j] = abb.sub(&weight[i * n + j], &weight[j * n + i]);
        cost[i * n + j] = abb.sub(&weight[j * n + i], &weight[i * n + j]);
    }

    let mut net = vec![abb.constant(0); n * n];
    let big = shape.capacity_bound as i64 + 1;

    for _ in 0..schedule.iterations {
        let mut residual = vec![abb.constant(0); n * n];
        let mut usable = vec![abb.constant(0); n * n];
        let zero = abb.constant(0);
        for &(i, j) in &pairs {
            residual[i * n + j] = abb.sub(&cap[i * n + j], &net[i * n + j]);
            usable[i * n + j] = abb.lt(&zero, &residual[i * n + j]);
        }

        let mut dist = vec![abb.constant(0); n];
        let mut pred: Vec<Shared> = (0..n).map(|v| abb.constant(v as i64)).collect();
        let mut last = abb.constant(0);
        let mut found = abb.constant(0);
        for pass in 0..n {
            for &(i, j) in &pairs {
                let cand = abb.add(&dist[i], &cost[i * n + j]);
                let better = abb.lt(&cand, &dist[j]);
                let cond = abb.mul(&usable[i * n + j], &better);
                dist[j] = abb.select(&cond, &cand, &dist[j]);
                let from = abb.constant(i as i64);
                pred[j] = abb.select(&cond, &from, &pred[j]);
                if pass == n - 1 {
                    let to = abb.constant(j as i64);
                    last = abb.select(&cond, &to, &last);
                    let both = abb.mul(&found, &cond);
                    let any = abb.add(&found, &cond);
                    found = abb.sub(&any, &both);
                }
            }
        }

        // Walk back onto the predecessor cycle.
        let mut cur = last;
        for _ in 0..n {
            let hot = one_hot(&mut abb, &cur, n);
            cur = lookup(&mut abb, &hot, &pred);
        }
        let anchor = one_hot(&mut abb, &cur, n);

        // Mark the cycle's arcs.
        let mut marked = vec![abb.constant(0); n * n];
        let mut cur_hot = anchor.clone();
        let mut active = abb.constant(1);
        for _ in 0..n {
            let p = lookup(&mut abb, &cur_hot, &pred);
            let p_hot = one_hot(&mut abb, &p, n);
            let gated: Vec<Shared> = p_hot.iter().map(|b| abb.mul(&active, b)).collect();
            for &(i, j) in &pairs {
                let hit = abb.mul(&gated[i], &cur_hot[j]);
                marked[i * n + j] = abb.add(&marked[i * n + j], &hit);
            }
            let hits: Vec<Shared> = p_hot.iter().zip(&anchor).map(|(a, b)| abb.mul(a, b)).collect();
            let closed = abb.sum(&hits);
            let stop = abb.mul(&active, &closed);
            active = abb.sub(&active, &stop);
            cur_hot = p_hot;
        }

        // Bottleneck and gain of the marked cycle.
        let mut bottleneck = abb.constant(big);
        let mut gain_terms = Vec::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            let big_c = abb.constant(big);
            let room = abb.select(&marked[i * n + j], &residual[i * n + j], &big_c);
            let smaller = abb.lt(&room, &bottleneck);
            bottleneck = abb.select(&smaller, &room, &bottleneck);
            gain_terms.push(abb.mul(&marked[i * n + j], &gain[i * n + j]));
        }
        let cycle_gain = abb.sum(&gain_terms);
        let improving = abb.lt(&zero, &cycle_gain);
        let apply = abb.mul(&found, &improving);
        let step = abb.mul(&apply, &bottleneck);

        let mut pushed = vec![abb.constant(0); n * n];
        for &(i, j) in &pairs {
            pushed[i * n + j] = abb.mul(&marked[i * n + j], &step);
        }
        for &(i, j) in &pairs {
            let delta = abb.sub(&pushed[i * n + j], &pushed[j * n + i]);
            net[i * n + j] = abb.add(&net[i * n + j], &delta);
        }
    }

    if let Some(fault) = abb.fault() {
        return Err(MpcError::ModulusViolation(fault.to_owned()));
    }
    let messages = abb.messages();
    let max_magnitude = abb.max_magnitude();
    let circulation = abb.store(&net);
    Ok(PrivateSolveOutput { circulation, transcript: abb.into_transcript(), messages, max_magnitude })
}

/// Shared one-hot encoding of a shared index in `0..n`.
fn one_hot(abb: &mut Abb, index: &Shared, n: usize) -> Vec<Shared> {
    (0..n)
        .map(|v| {
            let c = abb.constant(v as i64);
            abb.eq(index, &c)
        })
        .collect()
}

/// `table[index]` for a one-hot `index`.
fn lookup(abb: &mut Abb, hot: &[Shared], table: &[Shared]) -> Shared {
    let terms: Vec<Shared> = hot.iter().zip(table).map(|(h, t)| abb.mul(h, t)).collect();
    abb.sum(&terms)
}
