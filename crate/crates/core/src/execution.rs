//! Atomic execution of cycle flows with hashed timelock contracts.
//!
//! Every cycle gets its own secret, hash and chain of contracts with
//! timelocks `L, L-1, ..., 1` starting at a randomly chosen initiator. The
//! simulator runs in synchronous rounds:
//!
//! * round 0, locking: contracts are funded in cycle order from the
//!   initiator; a node that refuses to forward stops the chain.
//! * rounds 1.., release: a receiver that knows the preimage may settle a
//!   funded contract in any round `<= timelock`. Settling discloses the
//!   preimage to the sender, who can use it from the next round on. The
//!   initiator knows it from the start but only releases it by settling its
//!   incoming contract, which exists only if the whole cycle was locked.
//! * round `timelock + 1`: anything still pending is refunded.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::cycles::CycleFlow;
use crate::model::NodeId;

pub type Digest = [u8; 32];
pub type Preimage = [u8; 32];

pub fn digest(preimage: &[u8]) -> Digest {
    Sha256::digest(preimage).into()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecutionError {
    #[error("cycle {cycle} ended with {settled} settled and {refunded} refunded contracts")]
    PartialCycle {
        cycle: usize,
        settled: usize,
        refunded: usize,
    },
    #[error("invalid adversary json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HtlcState {
    Pending,
    Settled,
    Refunded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HtlcContract {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub amount: u64,
    #[serde(with = "hex_digest")]
    pub hash: Digest,
    pub timelock: u32,
    pub state: HtlcState,
}

mod hex_digest {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(d: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(d))
    }
}

impl HtlcContract {
    /// Settles with `preimage` in `round`. Fails (leaving the contract
    /// untouched) on a wrong preimage, an expired timelock or a non-pending
    /// contract.
    pub fn settle(&mut self, preimage: &[u8], round: u32) -> bool {
        if self.state != HtlcState::Pending || round > self.timelock || digest(preimage) != self.hash {
            return false;
        }
        self.state = HtlcState::Settled;
        true
    }

    /// Refunds the sender; only possible after the timelock.
    pub fn refund(&mut self, round: u32) -> bool {
        if self.state != HtlcState::Pending || round <= self.timelock {
            return false;
        }
        self.state = HtlcState::Refunded;
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStatus {
    Setup,
    Settling,
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleExecution {
    pub cycle: CycleFlow,
    pub initiator: NodeId,
    #[serde(skip)]
    pub secret: Preimage,
    pub htlcs: Vec<HtlcContract>,
    pub status: CycleStatus,
}

impl CycleExecution {
    pub fn max_timelock(&self) -> u32 {
        self.htlcs.iter().map(|h| h.timelock).max().unwrap_or(0)
    }
}

/// Picks an initiator and a secret with a seeded RNG and lays out the
/// contract chain starting at the initiator.
pub fn setup_cycle_htlcs(cycle: &CycleFlow, seed: u64) -> CycleExecution {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let len = cycle.len();
    let start = rng.gen_range(0..len);
    let mut secret = [0u8; 32];
    rng.fill_bytes(&mut secret);
    let hash = digest(&secret);
    let htlcs = (0..len)
        .map(|j| {
            let i = (start + j) % len;
            HtlcContract {
                sender: cycle.vertices[i].clone(),
                receiver: cycle.vertices[(i + 1) % len].clone(),
                amount: cycle.weight,
                hash,
                timelock: (len - j) as u32,
                state: HtlcState::Pending,
            }
        })
        .collect();
    CycleExecution {
        cycle: cycle.clone(),
        initiator: cycle.vertices[start].clone(),
        secret,
        htlcs,
        status: CycleStatus::Setup,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Honest,
    /// Never lets the cycle secret out: refuses to fund its outgoing contract
    /// and, as initiator, never releases the preimage.
    WithholdPreimage,
    /// Acts only in the last round its timelock allows.
    DelaySettleToExpiry,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Honest, Policy::WithholdPreimage, Policy::DelaySettleToExpiry];
}

/// Corrupted nodes and their behaviour; nodes not listed are honest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub corrupted: BTreeMap<NodeId, Policy>,
}

impl AdversarySpec {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn with(mut self, node: impl Into<NodeId>, policy: Policy) -> Self {
        self.corrupted.insert(node.into(), policy);
        self
    }

    pub fn policy(&self, node: &NodeId) -> Policy {
        self.corrupted.get(node).copied().unwrap_or(Policy::Honest)
    }

    pub fn is_corrupted(&self, node: &NodeId) -> bool {
        self.corrupted.contains_key(node)
    }

    pub fn from_json(text: &str) -> Result<Self, ExecutionError> {
        serde_json::from_str(text).map_err(|e| ExecutionError::Json(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Lock,
    Reveal,
    Settle,
    Refund,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionEvent {
    pub round: u32,
    pub event: EventKind,
    /// Contract index across all cycles, in execution order.
    pub htlc: usize,
    pub cycle: usize,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub amount: u64,
    /// Whether the contract was ever funded; only meaningful for refunds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub funded: Option<bool>,
}

/// Settled transfers per ordered channel direction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    pub transfers: BTreeMap<(NodeId, NodeId), u64>,
    pub rounds: u32,
}

#[derive(Serialize)]
struct LedgerFile<'a> {
    rounds: u32,
    transfers: Vec<LedgerTransfer<'a>>,
    net_deltas: BTreeMap<&'a NodeId, i64>,
}

#[derive(Serialize)]
struct LedgerTransfer<'a> {
    from: &'a NodeId,
    to: &'a NodeId,
    amount: u64,
}

impl Ledger {
    fn apply(&mut self, from: &NodeId, to: &NodeId, amount: u64) {
        *self.transfers.entry((from.clone(), to.clone())).or_default() += amount;
    }

    pub fn to_json<'a>(&'a self, nodes: impl IntoIterator<Item = &'a NodeId>) -> String {
        let file = LedgerFile {
            rounds: self.rounds,
            transfers: self
                .transfers
                .iter()
                .map(|((from, to), &amount)| LedgerTransfer { from, to, amount })
                .collect(),
            net_deltas: nodes.into_iter().map(|n| (n, net_balance_delta(self, n))).collect(),
        };
        serde_json::to_string_pretty(&file).expect("ledger serializes")
    }
}

/// Settled incoming minus settled outgoing amount of `node`.
pub fn net_balance_delta(ledger: &Ledger, node: &NodeId) -> i64 {
    ledger
        .transfers
        .iter()
        .map(|((from, to), &amount)| {
            let amount = amount as i64;
            (if to == node { amount } else { 0 }) - (if from == node { amount } else { 0 })
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionOutcome {
    pub executions: Vec<CycleExecution>,
    pub ledger: Ledger,
    pub events: Vec<ExecutionEvent>,
}

impl ExecutionOutcome {
    pub fn statuses(&self) -> Vec<CycleStatus> {
        self.executions.iter().map(|e| e.status).collect()
    }

    pub fn events_json(&self) -> String {
        serde_json::to_string_pretty(&self.events).expect("events serialize")
    }

    pub fn executions_json(&self) -> String {
        serde_json::to_string_pretty(&self.executions).expect("executions serialize")
    }
}

struct Tracker {
    funded: Vec<bool>,
    /// Round from which the node may use the preimage, per cycle position of
    /// the contract's receiver.
    known_from: Vec<Option<u32>>,
    base: usize,
}

/// Runs all cycles to completion under `adversary`.
pub fn run_execution(
    mut executions: Vec<CycleExecution>,
    adversary: &AdversarySpec,
) -> Result<ExecutionOutcome, ExecutionError> {
    let mut events = Vec::new();
    let mut ledger = Ledger::default();

    // Locking.
    let mut trackers = Vec::with_capacity(executions.len());
    let mut base = 0;
    for (c, exec) in executions.iter_mut().enumerate() {
        let len = exec.htlcs.len();
        let mut funded = vec![false; len];
        for (j, h) in exec.htlcs.iter().enumerate() {
            if adversary.policy(&h.sender) == Policy::WithholdPreimage {
                break;
            }
            funded[j] = true;
            events.push(event(0, EventKind::Lock, base + j, c, h, None));
        }
        // Receiver of contract j is the sender of contract j + 1; the last
        // contract pays the initiator, who holds the secret from the start.
        let mut known_from = vec![None; len];
        known_from[len - 1] = Some(1);
        trackers.push(Tracker { funded, known_from, base });
        base += len;
        exec.status = CycleStatus::Settling;
    }

    let horizon = executions.iter().map(|e| e.max_timelock()).max().unwrap_or(0);
    for round in 1..=horizon + 1 {
        for (c, (exec, tr)) in executions.iter_mut().zip(trackers.iter_mut()).enumerate() {
            let len = exec.htlcs.len();
            for j in (0..len).rev() {
                if !tr.funded[j] || exec.htlcs[j].state != HtlcState::Pending {
                    continue;
                }
                let receiver = &exec.htlcs[j].receiver;
                let knows = tr.known_from[j].is_some_and(|r| r <= round);
                let is_initiator = *receiver == exec.initiator;
                let acts = match adversary.policy(receiver) {
                    Policy::Honest => true,
                    Policy::DelaySettleToExpiry => round == exec.htlcs[j].timelock,
                    Policy::WithholdPreimage => !is_initiator,
                };
                if knows && acts && exec.htlcs[j].settle(&exec.secret, round) {
                    let h = &exec.htlcs[j];
                    if is_initiator {
                        events.push(event(round, EventKind::Reveal, tr.base + j, c, h, None));
                    }
                    events.push(event(round, EventKind::Settle, tr.base + j, c, h, None));
                    ledger.apply(&h.sender, &h.receiver, h.amount);
                    ledger.rounds = ledger.rounds.max(round);
                    if j > 0 {
                        tr.known_from[j - 1] = Some(round + 1);
                    }
                }
            }
            for j in 0..len {
                if exec.htlcs[j].refund(round) {
                    events.push(event(round, EventKind::Refund, tr.base + j, c, &exec.htlcs[j], Some(tr.funded[j])));
                    ledger.rounds = ledger.rounds.max(round);
                }
            }
        }
    }

    for (c, exec) in executions.iter_mut().enumerate() {
        let settled = exec.htlcs.iter().filter(|h| h.state == HtlcState::Settled).count();
        let refunded = exec.htlcs.iter().filter(|h| h.state == HtlcState::Refunded).count();
        exec.status = if settled == exec.htlcs.len() {
            CycleStatus::Completed
        } else if refunded == exec.htlcs.len() {
            CycleStatus::Aborted
        } else {
            return Err(ExecutionError::PartialCycle { cycle: c, settled, refunded });
        };
    }

    Ok(ExecutionOutcome { executions, ledger, events })
}

fn event(round: u32, kind: EventKind, htlc: usize, cycle: usize, h: &HtlcContract, funded: Option<bool>) -> ExecutionEvent {
    ExecutionEvent {
        round,
        event: kind,
        htlc,
        cycle,
        sender: h.sender.clone(),
        receiver: h.receiver.clone(),
        amount: h.amount,
        funded,
    }
}
