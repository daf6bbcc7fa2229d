//! Arithmetic modulo the Mersenne prime 2^61 - 1.

use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const MODULUS: u64 = (1 << 61) - 1;
/// Largest magnitude representable by a centered field element.
pub const MAX_MAGNITUDE: i64 = ((MODULUS - 1) / 2) as i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn new(v: u64) -> Fe {
        Fe(v % MODULUS)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Embeds a signed integer; callers keep `|v| <= MAX_MAGNITUDE`.
    pub fn from_i64(v: i64) -> Fe {
        if v >= 0 {
            Fe::new(v as u64)
        } else {
            -Fe::new(v.unsigned_abs())
        }
    }

    /// Representative in `[-(p-1)/2, (p-1)/2]`.
    pub fn centered(self) -> i64 {
        if self.0 > (MODULUS - 1) / 2 {
            -((MODULUS - self.0) as i64)
        } else {
            self.0 as i64
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Fe {
        // Rejection keeps the distribution exactly uniform.
        loop {
            let v = rng.gen::<u64>() >> 3;
            if v < MODULUS {
                return Fe(v);
            }
        }
    }
}

impl Add for Fe {
    type Output = Fe;
    fn add(self, rhs: Fe) -> Fe {
        let s = self.0 + rhs.0;
        Fe(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for Fe {
    type Output = Fe;
    fn sub(self, rhs: Fe) -> Fe {
        self + (-rhs)
    }
}

impl Neg for Fe {
    type Output = Fe;
    fn neg(self) -> Fe {
        if self.0 == 0 {
            self
        } else {
            Fe(MODULUS - self.0)
        }
    }
}

impl Mul for Fe {
    type Output = Fe;
    fn mul(self, rhs: Fe) -> Fe {
        let wide = u128::from(self.0) * u128::from(rhs.0);
        // 2^61 == 1 (mod p)
        let lo = (wide as u64) & MODULUS;
        let hi = (wide >> 61) as u64;
        Fe::new(lo) + Fe::new(hi)
    }
}

impl std::iter::Sum for Fe {
    fn sum<I: Iterator<Item = Fe>>(iter: I) -> Fe {
        iter.fold(Fe::ZERO, |a, b| a + b)
    }
}
