//! Scalar fields used for coordinates.
//!
//! Two representations exist: exact rationals ([`Q`]) and `f64`. Every
//! geometric type is generic over [`Scalar`], so exact and floating values can
//! never be combined without an explicit conversion.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Q = num_rational::Ratio<i128>;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` for exact arithmetic.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(v: i64) -> Self;
    fn from_frac(num: i64, den: i64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    /// Conversion from an exact rational (rounds for floats).
    fn from_q(q: Q) -> Self;
    /// Conversion from a float; `None` when the target is exact.
    fn from_f64(x: f64) -> Option<Self>;
    /// The exact value, when there is one.
    fn to_q(self) -> Option<Q>;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Q as Zero>::zero()
    }
    fn one() -> Self {
        <Q as One>::one()
    }
    fn from_int(v: i64) -> Self {
        Q::from_integer(v as i128)
    }
    fn from_frac(num: i64, den: i64) -> Self {
        Q::new(num as i128, den as i128)
    }
    fn to_f64(self) -> f64 {
        // i128 -> f64 is lossy beyond 2^53 but the quotient stays accurate.
        self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN)
    }
    fn abs(self) -> Self {
        Signed::abs(&self)
    }
    fn from_q(q: Q) -> Self {
        q
    }
    fn from_f64(_: f64) -> Option<Self> {
        None
    }
    fn to_q(self) -> Option<Q> {
        Some(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_frac(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn from_q(q: Q) -> Self {
        q.to_f64()
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }
    fn to_q(self) -> Option<Q> {
        None
    }
}

/// Largest rational of the form `k / 2^bits` not exceeding `x` (x finite).
pub fn dyadic_floor(x: f64, bits: u32) -> Q {
    let scale = (1i128 << bits) as f64;
    Q::new((x * scale).floor() as i128, 1i128 << bits)
}

/// `2^e` as an exact rational (negative exponents allowed).
pub fn pow2(e: i32) -> Q {
    if e >= 0 {
        Q::from_integer(1i128 << e)
    } else {
        Q::new(1, 1i128 << (-e))
    }
}

/// Exact square root of a rational when it is a perfect square.
pub fn exact_sqrt(q: Q) -> Option<Q> {
    if *q.numer() < 0 {
        return None;
    }
    let n = isqrt(*q.numer())?;
    let d = isqrt(*q.denom())?;
    Some(Q::new(n, d))
}

fn isqrt(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let mut r = (v as f64).sqrt() as i128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    (r * r == v).then_some(r)
}
