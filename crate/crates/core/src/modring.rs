//! Exact residue arithmetic over `Z_q`.
//!
//! Moduli are bounded by `2^31 - 1` so every sum and product of two
//! canonical residues fits in a `u64` without widening.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Largest modulus accepted by [`Modulus::new`].
pub const MAX_MODULUS: u64 = (1 << 31) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ModulusError {
    #[error("modulus must be at least 1")]
    Zero,
    #[error("modulus {0} exceeds the supported maximum 2^31 - 1")]
    TooLarge(u64),
    #[error("value {value} is not a canonical residue modulo {q}")]
    NotCanonical { value: u64, q: u64 },
}

/// The number of residues `q >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(q: u64) -> Result<Self, ModulusError> {
        match q {
            0 => Err(ModulusError::Zero),
            q if q > MAX_MODULUS => Err(ModulusError::TooLarge(q)),
            q => Ok(Modulus(q)),
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Builds the residue `val`, which must already be canonical.
    pub fn elem(self, val: u64) -> Result<ZqElem, ModulusError> {
        if val < self.0 {
            Ok(ZqElem { val, q: self })
        } else {
            Err(ModulusError::NotCanonical { value: val, q: self.0 })
        }
    }

    /// `val mod q` for an unsigned value.
    #[inline]
    pub fn reduce_u64(self, val: u64) -> ZqElem {
        ZqElem { val: val % self.0, q: self }
    }

    #[inline]
    pub fn zero(self) -> ZqElem {
        ZqElem { val: 0, q: self }
    }

    /// Every residue in ascending order.
    pub fn elements(self) -> impl DoubleEndedIterator<Item = ZqElem> + Clone {
        (0..self.0).map(move |val| ZqElem { val, q: self })
    }

    /// `ceil(log2 q)`, i.e. the least `s` with `q <= 2^s`.
    pub fn ceil_log2(self) -> u32 {
        if self.0 <= 1 {
            0
        } else {
            64 - (self.0 - 1).leading_zeros()
        }
    }

    pub fn log2(self) -> f64 {
        (self.0 as f64).log2()
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A canonical residue `0 <= val < q` tagged with its modulus.
///
/// Mixing residues of different moduli is a bug in the caller and panics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZqElem {
    val: u64,
    q: Modulus,
}

impl ZqElem {
    #[inline]
    pub fn val(self) -> u64 {
        self.val
    }

    #[inline]
    pub fn modulus(self) -> Modulus {
        self.q
    }

    #[inline]
    fn check_same(self, other: ZqElem) {
        assert_eq!(self.q, other.q, "modulus mismatch: {} vs {}", self.q, other.q);
    }
}

impl fmt::Display for ZqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.val)
    }
}

impl Add for ZqElem {
    type Output = ZqElem;

    #[inline]
    fn add(self, rhs: ZqElem) -> ZqElem {
        self.check_same(rhs);
        let q = self.q.0;
        let s = self.val + rhs.val;
        ZqElem { val: if s >= q { s - q } else { s }, q: self.q }
    }
}

impl Sub for ZqElem {
    type Output = ZqElem;

    #[inline]
    fn sub(self, rhs: ZqElem) -> ZqElem {
        self.check_same(rhs);
        let val = if self.val >= rhs.val { self.val - rhs.val } else { self.val + self.q.0 - rhs.val };
        ZqElem { val, q: self.q }
    }
}

impl Mul for ZqElem {
    type Output = ZqElem;

    #[inline]
    fn mul(self, rhs: ZqElem) -> ZqElem {
        self.check_same(rhs);
        ZqElem { val: self.val * rhs.val % self.q.0, q: self.q }
    }
}

impl Neg for ZqElem {
    type Output = ZqElem;

    #[inline]
    fn neg(self) -> ZqElem {
        self.q.zero() - self
    }
}

/// Canonical representative of a signed integer modulo `q`.
pub fn reduce(n: i64, q: Modulus) -> ZqElem {
    let val = (n as i128).rem_euclid(q.0 as i128) as u64;
    ZqElem { val, q }
}

/// The branch offset `r = 2^s mod q`, by square-and-multiply.
pub fn branch_offset(q: Modulus, s: u32) -> ZqElem {
    let m = q.0;
    let mut result = 1 % m;
    let mut base = 2 % m;
    let mut e = s;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    ZqElem { val: result, q }
}
