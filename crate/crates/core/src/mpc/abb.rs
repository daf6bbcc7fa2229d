//! Simulated arithmetic black box.
//!
//! All delegates live in one process. Linear operations are local to each
//! delegate's share. Multiplication uses Beaver triples handed out by an
//! honest dealer; comparison is the ideal functionality, which returns a
//! freshly shared bit. Every primitive is appended to a [`Transcript`] that
//! records only the operation kind and operand length, never a value.
//!
//! With shadowing enabled, each shared value also carries its plaintext,
//! computed in wide integer arithmetic, and every result is checked against
//! the reconstruction so that any modular wraparound is caught.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::field::{Fe, MAX_MAGNITUDE};
use super::sharing::{split, SharedVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Add,
    Mul,
    Cmp,
    Reveal,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Mul => "mul",
            OpKind::Cmp => "cmp",
            OpKind::Reveal => "reveal",
        }
    }
}

/// Public log of primitive operations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    ops: Vec<(OpKind, u32)>,
}

impl Transcript {
    fn push(&mut self, kind: OpKind, len: u32) {
        self.ops.push((kind, len));
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn count(&self, kind: OpKind) -> usize {
        self.ops.iter().filter(|(k, _)| *k == kind).count()
    }

    /// One line per primitive: `op_kind operand_count`.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.ops.len() * 6);
        for (kind, len) in &self.ops {
            let _ = writeln!(out, "{} {}", kind.name(), len);
        }
        out
    }
}

/// A secret-shared integer: one field element per delegate.
#[derive(Debug, Clone)]
pub struct Shared {
    parts: Vec<Fe>,
    shadow: Option<i128>,
}

pub struct Abb {
    k: usize,
    dealer: ChaCha20Rng,
    transcript: Transcript,
    shadow: bool,
    fault: Option<String>,
    max_magnitude: i128,
    messages: u64,
}

impl Abb {
    pub fn new(k: usize, seed: u64, shadow: bool) -> Self {
        Abb {
            k,
            dealer: ChaCha20Rng::seed_from_u64(seed),
            transcript: Transcript::default(),
            shadow,
            fault: None,
            max_magnitude: 0,
            messages: 0,
        }
    }

    pub fn delegates(&self) -> usize {
        self.k
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// First shadow mismatch observed, if any.
    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    /// Largest plaintext magnitude seen while shadowing.
    pub fn max_magnitude(&self) -> i128 {
        self.max_magnitude
    }

    /// Point-to-point messages exchanged by delegates so far.
    pub fn messages(&self) -> u64 {
        self.messages
    }

    fn check(&mut self, s: Shared) -> Shared {
        if let Some(plain) = s.shadow {
            self.max_magnitude = self.max_magnitude.max(plain.abs());
            let opened = s.parts.iter().copied().sum::<Fe>().centered();
            if self.fault.is_none() && (plain.abs() > i128::from(MAX_MAGNITUDE) || i128::from(opened) != plain) {
                self.fault = Some(format!("plaintext {plain} reconstructs as {opened}"));
            }
        }
        s
    }

    fn shadow_of(&self, v: i128) -> Option<i128> {
        self.shadow.then_some(v)
    }

    /// A public constant; delegate 0 holds it, the rest hold zero.
    pub fn constant(&self, c: i64) -> Shared {
        let mut parts = vec![Fe::ZERO; self.k];
        parts[0] = Fe::from_i64(c);
        Shared { parts, shadow: self.shadow_of(i128::from(c)) }
    }

    pub fn load(&self, v: &SharedVector, position: usize, plain: Option<i64>) -> Shared {
        Shared {
            parts: v.parts_at(position).to_vec(),
            shadow: if self.shadow { plain.map(i128::from) } else { None },
        }
    }

    pub fn store(&self, values: &[Shared]) -> SharedVector {
        SharedVector::from_parts(self.k, values.iter().map(|s| s.parts.clone()).collect())
    }

    fn combine(a: &Shared, b: &Shared, f: impl Fn(Fe, Fe) -> Fe, g: impl Fn(i128, i128) -> i128) -> Shared {
        Shared {
            parts: a.parts.iter().zip(&b.parts).map(|(&x, &y)| f(x, y)).collect(),
            shadow: a.shadow.zip(b.shadow).map(|(x, y)| g(x, y)),
        }
    }

    pub fn add(&mut self, a: &Shared, b: &Shared) -> Shared {
        self.transcript.push(OpKind::Add, 1);
        let s = Self::combine(a, b, |x, y| x + y, |x, y| x + y);
        self.check(s)
    }

    pub fn sub(&mut self, a: &Shared, b: &Shared) -> Shared {
        self.transcript.push(OpKind::Add, 1);
        let s = Self::combine(a, b, |x, y| x - y, |x, y| x - y);
        self.check(s)
    }

    pub fn add_const(&mut self, a: &Shared, c: i64) -> Shared {
        let c = self.constant(c);
        self.add(a, &c)
    }

    /// Sum of several values, logged as one linear operation.
    pub fn sum(&mut self, values: &[Shared]) -> Shared {
        self.transcript.push(OpKind::Add, values.len() as u32);
        let mut acc = Shared { parts: vec![Fe::ZERO; self.k], shadow: self.shadow_of(0) };
        for v in values {
            acc = Self::combine(&acc, v, |x, y| x + y, |x, y| x + y);
        }
        self.check(acc)
    }

    /// Beaver multiplication: the dealer supplies `(a, b, a*b)`, delegates
    /// open `x - a` and `y - b` to each other and combine locally.
    pub fn mul(&mut self, x: &Shared, y: &Shared) -> Shared {
        self.transcript.push(OpKind::Mul, 1);
        let ta = Fe::random(&mut self.dealer);
        let tb = Fe::random(&mut self.dealer);
        let a = split(ta, self.k, &mut self.dealer);
        let b = split(tb, self.k, &mut self.dealer);
        let c = split(ta * tb, self.k, &mut self.dealer);
        // Each delegate broadcasts its shares of d and e.
        self.messages += 2 * (self.k * (self.k - 1)) as u64;
        let d: Fe = x.parts.iter().zip(&a).map(|(&xi, &ai)| xi - ai).sum();
        let e: Fe = y.parts.iter().zip(&b).map(|(&yi, &bi)| yi - bi).sum();
        let parts = (0..self.k)
            .map(|i| {
                let z = c[i] + d * b[i] + e * a[i];
                if i == 0 {
                    z + d * e
                } else {
                    z
                }
            })
            .collect();
        let s = Shared { parts, shadow: x.shadow.zip(y.shadow).map(|(p, q)| p * q) };
        self.check(s)
    }

    /// Shared bit `[a < b]`.
    pub fn lt(&mut self, a: &Shared, b: &Shared) -> Shared {
        self.transcript.push(OpKind::Cmp, 1);
        self.messages += self.k as u64;
        let diff: Fe = a.parts.iter().zip(&b.parts).map(|(&x, &y)| x - y).sum();
        let bit = i64::from(diff.centered() < 0);
        let s = Shared {
            parts: split(Fe::from_i64(bit), self.k, &mut self.dealer),
            shadow: a.shadow.zip(b.shadow).map(|(x, y)| i128::from(x < y)),
        };
        self.check(s)
    }

    /// Shared bit `[a == b]` from two comparisons.
    pub fn eq(&mut self, a: &Shared, b: &Shared) -> Shared {
        let below = self.lt(a, b);
        let above = self.lt(b, a);
        let either = self.add(&below, &above);
        let one = self.constant(1);
        self.sub(&one, &either)
    }

    /// `cond ? x : y` for a shared bit `cond`.
    pub fn select(&mut self, cond: &Shared, x: &Shared, y: &Shared) -> Shared {
        let delta = self.sub(x, y);
        let picked = self.mul(cond, &delta);
        self.add(y, &picked)
    }

    pub fn reveal(&mut self, a: &Shared) -> i64 {
        self.transcript.push(OpKind::Reveal, 1);
        self.messages += (self.k * (self.k - 1)) as u64;
        a.parts.iter().copied().sum::<Fe>().centered()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(abb: &Abb, v: i64, seed: u64) -> Shared {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let vec = SharedVector::share_all(&[v], abb.delegates(), &mut rng).unwrap();
        abb.load(&vec, 0, Some(v))
    }

    #[test]
    fn arithmetic_matches_plaintext() {
        let mut abb = Abb::new(3, 7, true);
        let (a, b) = (input(&abb, -12, 1), input(&abb, 5, 2));
        let p = abb.mul(&a, &b);
        let s = abb.add(&a, &b);
        let d = abb.sub(&a, &b);
        assert_eq!(abb.reveal(&p), -60);
        assert_eq!(abb.reveal(&s), -7);
        assert_eq!(abb.reveal(&d), -17);
        let lt = abb.lt(&a, &b);
        let ge = abb.lt(&b, &a);
        assert_eq!((abb.reveal(&lt), abb.reveal(&ge)), (1, 0));
        let same = abb.eq(&b, &b);
        assert_eq!(abb.reveal(&same), 1);
        let picked = abb.select(&lt, &a, &b);
        assert_eq!(abb.reveal(&picked), -12);
        assert!(abb.fault().is_none());
        assert_eq!(abb.transcript().count(OpKind::Reveal), 7);
    }

    #[test]
    fn shadow_catches_wraparound() {
        let mut abb = Abb::new(2, 1, true);
        let big = input(&abb, MAX_MAGNITUDE, 3);
        let two = abb.constant(2);
        let _ = abb.mul(&big, &two);
        assert!(abb.fault().is_some());
    }

    #[test]
    fn transcript_dump_format() {
        let mut abb = Abb::new(2, 1, false);
        let x = abb.constant(1);
        let y = abb.add(&x, &x);
        let _ = abb.mul(&x, &y);
        let _ = abb.lt(&x, &y);
        let _ = abb.sum(&[x.clone(), y.clone(), x]);
        assert_eq!(abb.transcript().dump(), "add 1\nmul 1\ncmp 1\nadd 3\n");
    }
}
