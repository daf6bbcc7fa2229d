//! Delegate selection by seeded hash sortition: every participant's ticket is
//! `SHA-256(seed || id)` and the `k` smallest tickets win.

use sha2::{Digest, Sha256};

use super::MpcError;
use crate::model::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegateSet {
    /// Ordered by ticket, smallest first.
    pub delegates: Vec<NodeId>,
    pub seed: Vec<u8>,
}

impl DelegateSet {
    pub fn len(&self) -> usize {
        self.delegates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delegates.is_empty()
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.delegates.contains(node)
    }
}

pub fn ticket(seed: &[u8], node: &NodeId) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed);
    h.update(node.as_str().as_bytes());
    h.finalize().into()
}

pub fn select_delegates(participants: &[NodeId], k: usize, seed: &[u8]) -> Result<DelegateSet, MpcError> {
    let mut unique = participants.to_vec();
    unique.sort();
    unique.dedup();
    if k < 2 {
        return Err(MpcError::KTooSmall(k));
    }
    if k > unique.len() {
        return Err(MpcError::KTooLarge { k, participants: unique.len() });
    }
    let mut tickets: Vec<([u8; 32], NodeId)> = unique.into_iter().map(|n| (ticket(seed, &n), n)).collect();
    tickets.sort();
    Ok(DelegateSet {
        delegates: tickets.into_iter().take(k).map(|(_, n)| n).collect(),
        seed: seed.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn people(n: usize) -> Vec<NodeId> {
        (0..n).map(|i| NodeId::new(format!("p{i}"))).collect()
    }

    #[test]
    fn full_selection_and_errors() {
        let all = select_delegates(&people(4), 4, b"s").unwrap();
        let mut got = all.delegates.clone();
        got.sort();
        assert_eq!(got, people(4));
        assert!(matches!(select_delegates(&people(4), 5, b"s"), Err(MpcError::KTooLarge { .. })));
        assert!(matches!(select_delegates(&people(4), 1, b"s"), Err(MpcError::KTooSmall(1))));
    }

    #[test]
    fn deterministic_and_smallest_tickets() {
        let ps = people(5);
        let a = select_delegates(&ps, 2, b"round-7").unwrap();
        assert_eq!(a, select_delegates(&ps, 2, b"round-7").unwrap());
        // Independent check: rank every participant by its hex digest.
        let mut ranked: Vec<(String, &NodeId)> = ps
            .iter()
            .map(|p| {
                let mut bytes = b"round-7".to_vec();
                bytes.extend_from_slice(p.as_str().as_bytes());
                (hex::encode(Sha256::digest(&bytes)), p)
            })
            .collect();
        ranked.sort();
        let expected: Vec<NodeId> = ranked.iter().take(2).map(|(_, p)| (*p).clone()).collect();
        assert_eq!(a.delegates, expected);
    }

    #[test]
    fn selection_is_roughly_uniform() {
        let ps = people(6);
        let mut hits = [0u32; 6];
        let rounds = 3000u32;
        for r in 0..rounds {
            for d in select_delegates(&ps, 2, &r.to_le_bytes()).unwrap().delegates {
                let idx: usize = d.as_str()[1..].parse().unwrap();
                hits[idx] += 1;
            }
        }
        let expected = f64::from(rounds) * 2.0 / 6.0;
        let chi2: f64 = hits.iter().map(|&h| (f64::from(h) - expected).powi(2) / expected).sum();
        // 5 degrees of freedom, p = 0.001 critical value.
        assert!(chi2 < 20.52, "chi2 = {chi2}, hits = {hits:?}");
    }
}
