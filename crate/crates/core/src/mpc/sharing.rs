//! k-of-k additive secret sharing over the 61-bit prime field.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::{Fe, MAX_MAGNITUDE};
use super::MpcError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub delegate_index: usize,
    pub value: Fe,
}

/// Splits `x` into `k` shares summing to `x` modulo p. Any `k - 1` of them
/// are independent uniform field elements.
pub fn share<R: Rng + ?Sized>(x: i64, k: usize, rng: &mut R) -> Result<Vec<Share>, MpcError> {
    if x.unsigned_abs() > MAX_MAGNITUDE as u64 {
        return Err(MpcError::OutOfRange(i128::from(x)));
    }
    if k == 0 {
        return Err(MpcError::KTooSmall(k));
    }
    let parts = split(Fe::from_i64(x), k, rng);
    Ok(parts
        .into_iter()
        .enumerate()
        .map(|(delegate_index, value)| Share { delegate_index, value })
        .collect())
}

pub(crate) fn split<R: Rng + ?Sized>(x: Fe, k: usize, rng: &mut R) -> Vec<Fe> {
    let mut parts: Vec<Fe> = (1..k).map(|_| Fe::random(rng)).collect();
    let masked: Fe = parts.iter().copied().sum();
    parts.insert(0, x - masked);
    parts
}

/// Sum of the shares, as the centered representative.
pub fn reconstruct(shares: &[Share]) -> i64 {
    shares.iter().map(|s| s.value).sum::<Fe>().centered()
}

/// A vector of secret-shared integers, `positions[i][d]` held by delegate `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedVector {
    k: usize,
    positions: Vec<Vec<Fe>>,
}

impl SharedVector {
    pub fn share_all<R: Rng + ?Sized>(values: &[i64], k: usize, rng: &mut R) -> Result<Self, MpcError> {
        let positions = values
            .iter()
            .map(|&v| share(v, k, rng).map(|s| s.into_iter().map(|s| s.value).collect()))
            .collect::<Result<_, _>>()?;
        Ok(SharedVector { k, positions })
    }

    pub(crate) fn from_parts(k: usize, positions: Vec<Vec<Fe>>) -> Self {
        debug_assert!(positions.iter().all(|p| p.len() == k));
        SharedVector { k, positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn delegates(&self) -> usize {
        self.k
    }

    pub fn shares_at(&self, position: usize) -> Vec<Share> {
        self.positions[position]
            .iter()
            .enumerate()
            .map(|(delegate_index, &value)| Share { delegate_index, value })
            .collect()
    }

    pub(crate) fn parts_at(&self, position: usize) -> &[Fe] {
        &self.positions[position]
    }

    pub fn reconstruct(&self, position: usize) -> i64 {
        self.positions[position].iter().copied().sum::<Fe>().centered()
    }

    pub fn reconstruct_all(&self) -> Vec<i64> {
        (0..self.len()).map(|i| self.reconstruct(i)).collect()
    }

    /// What delegate `d` holds: one field element per position.
    pub fn delegate_view(&self, d: usize) -> Vec<Fe> {
        self.positions.iter().map(|p| p[d]).collect()
    }

    /// One JSON array of field elements per delegate.
    pub fn share_files(&self) -> Vec<String> {
        (0..self.k)
            .map(|d| serde_json::to_string(&self.delegate_view(d)).expect("field elements serialize"))
            .collect()
    }

    /// Reassembles a vector from per-delegate share files.
    pub fn from_share_files(files: &[String]) -> Result<Self, MpcError> {
        let views: Vec<Vec<Fe>> = files
            .iter()
            .map(|f| serde_json::from_str(f).map_err(|e| MpcError::ShapeMismatch(e.to_string())))
            .collect::<Result<_, _>>()?;
        let len = views.first().map_or(0, Vec::len);
        if views.iter().any(|v| v.len() != len) {
            return Err(MpcError::ShapeMismatch("share files differ in length".into()));
        }
        let positions = (0..len).map(|i| views.iter().map(|v| v[i]).collect()).collect();
        Ok(SharedVector { k: views.len(), positions })
    }

    /// Position-wise sum of two sharings.
    pub fn add(&self, other: &SharedVector) -> Result<SharedVector, MpcError> {
        if self.k != other.k || self.len() != other.len() {
            return Err(MpcError::ShapeMismatch("vectors differ in shape".into()));
        }
        let positions = self
            .positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x + y).collect())
            .collect();
        Ok(SharedVector { k: self.k, positions })
    }
}
