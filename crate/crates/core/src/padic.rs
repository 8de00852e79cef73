//! Exact p-adic primitives: base-p digit sums, valuations of integers,
//! rationals and factorials, and the unit residue of `(p^r a)! / (p^(r-1) a)!`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rational prime, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// `p^e`, failing if it overflows `u64`.
    pub fn pow(self, e: u32) -> Result<u64> {
        self.0
            .checked_pow(e)
            .ok_or_else(|| Error::Overflow(format!("{}^{}", self.0, e)))
    }

    /// All primes up to `bound`, in increasing order.
    pub fn up_to(bound: u64) -> Vec<Prime> {
        (2..=bound).filter(|&n| is_prime(n)).map(Prime).collect()
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the witness set is exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A p-adic valuation; `Infinite` is the valuation of zero and compares
/// greater than every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn is_finite(self) -> bool {
        matches!(self, Valuation::Finite(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    /// True when the valuation is `>= bound` (always for zero).
    pub fn at_least(self, bound: i64) -> bool {
        self >= Valuation::Finite(bound)
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
            (Valuation::Finite(_), Valuation::Infinite) => Ordering::Less,
            (Valuation::Infinite, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<i64> for Valuation {
    type Output = Valuation;
    fn add(self, rhs: i64) -> Valuation {
        match self {
            Valuation::Finite(v) => Valuation::Finite(v + rhs),
            Valuation::Infinite => Valuation::Infinite,
        }
    }
}

impl Sub<i64> for Valuation {
    type Output = Valuation;
    fn sub(self, rhs: i64) -> Valuation {
        self + (-rhs)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Valuation::Finite(v) => s.serialize_i64(*v),
            Valuation::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Valuation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Valuation::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Valuation::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad valuation {s:?}"))),
        }
    }
}

/// Sum of the base-p digits of `n >= 1`.
pub fn digit_sum(n: u64, p: Prime) -> Result<u64> {
    if n == 0 {
        return Err(Error::NonPositive {
            what: "digit_sum argument",
            value: n.to_string(),
        });
    }
    Ok(digit_sum_unchecked(n, p.get()))
}

#[inline]
pub(crate) fn digit_sum_unchecked(mut n: u64, p: u64) -> u64 {
    let mut s = 0;
    while n > 0 {
        s += n % p;
        n /= p;
    }
    s
}

/// Digit sum for arbitrary-precision input.
pub fn digit_sum_big(n: &BigUint, p: Prime) -> Result<u64> {
    if n.is_zero() {
        return Err(Error::NonPositive {
            what: "digit_sum argument",
            value: "0".into(),
        });
    }
    let mut n = n.clone();
    let mut s = 0u64;
    let pb = BigUint::from(p.get());
    while !n.is_zero() {
        let digit = &n % &pb;
        s += digit.to_u64().expect("digit below p");
        n /= &pb;
    }
    Ok(s)
}

/// Largest power of p dividing `n`; `Infinite` for zero.
pub fn ordp_int(n: &BigInt, p: Prime) -> Valuation {
    if n.is_zero() {
        return Valuation::Infinite;
    }
    Valuation::Finite(ordp_nonzero(n.magnitude(), p.get()) as i64)
}

pub(crate) fn ordp_nonzero(n: &BigUint, p: u64) -> u64 {
    // strip the largest power of p that fits in a machine word at a time
    let mut chunk_exp = 1u64;
    let mut chunk = p;
    while let Some(next) = chunk.checked_mul(p) {
        chunk = next;
        chunk_exp += 1;
    }
    let mut v = 0;
    let mut n = n.clone();
    while (&n % chunk).is_zero() {
        n /= chunk;
        v += chunk_exp;
    }
    while (&n % p).is_zero() {
        n /= p;
        v += 1;
    }
    v
}

#[inline]
pub(crate) fn ordp_u64(mut n: u64, p: u64) -> u64 {
    debug_assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Valuation of a machine integer; `Infinite` for zero.
pub fn ordp_u64_valuation(n: u64, p: Prime) -> Valuation {
    if n == 0 {
        Valuation::Infinite
    } else {
        Valuation::Finite(ordp_u64(n, p.get()) as i64)
    }
}

/// `ord_p(a/b) = ord_p(a) - ord_p(b)`; `Infinite` for zero.
pub fn ordp_rational(q: &BigRational, p: Prime) -> Valuation {
    if q.is_zero() {
        return Valuation::Infinite;
    }
    let num = ordp_nonzero(q.numer().magnitude(), p.get()) as i64;
    let den = ordp_nonzero(q.denom().magnitude(), p.get()) as i64;
    Valuation::Finite(num - den)
}

/// `ord_p(n!) = (n - S_p(n)) / (p - 1)`.
pub fn ordp_factorial(n: u64, p: Prime) -> u64 {
    if n == 0 {
        return 0;
    }
    (n - digit_sum_unchecked(n, p.get())) / (p.get() - 1)
}

/// Unit part of `(p^r a)! / (p^(r-1) a)!` modulo `p^r`, together with its
/// p-adic valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorialRatioUnit {
    pub residue: u64,
    pub modulus: u64,
    pub valuation: u64,
}

/// Strips every factor of p from the integers in `(p^(r-1) a, p^r a]` and
/// multiplies the remainders modulo `p^r`. The stripped exponents must add
/// up to exactly `p^(r-1) a`.
pub fn factorial_ratio_unit(a: u64, r: u32, p: Prime) -> Result<FactorialRatioUnit> {
    if a == 0 {
        return Err(Error::NonPositive {
            what: "a",
            value: "0".into(),
        });
    }
    if r == 0 {
        return Err(Error::NonPositive {
            what: "r",
            value: "0".into(),
        });
    }
    let modulus = p.pow(r)?;
    let low = p
        .pow(r - 1)?
        .checked_mul(a)
        .ok_or_else(|| Error::Overflow(format!("{p}^{} * {a}", r - 1)))?;
    let high = modulus
        .checked_mul(a)
        .ok_or_else(|| Error::Overflow(format!("{p}^{r} * {a}")))?;

    let pv = p.get();
    let mut residue = 1 % modulus;
    let mut stripped = 0u64;
    for j in (low + 1)..=high {
        let mut unit = j;
        while unit % pv == 0 {
            unit /= pv;
            stripped += 1;
        }
        residue = mul_mod(residue, unit % modulus, modulus);
    }
    let valuation = ordp_factorial(high, p) - ordp_factorial(low, p);
    assert_eq!(
        stripped, valuation,
        "stripped exponent disagrees with the factorial valuation formula"
    );
    assert_eq!(valuation, low, "valuation of the factorial ratio must be p^(r-1) a");
    Ok(FactorialRatioUnit {
        residue,
        modulus,
        valuation,
    })
}

/// Product of the units `1 <= j < p^r` modulo `p^r`.
pub fn unit_product(p: Prime, r: u32) -> Result<u64> {
    let modulus = p.pow(r)?;
    let pv = p.get();
    Ok((1..modulus)
        .filter(|j| j % pv != 0)
        .fold(1 % modulus, |acc, j| mul_mod(acc, j, modulus)))
}

/// `R_p(a) = prod_{j=1}^{p-1} ((a-1)p + j)`.
pub fn rp_product(a: u64, p: Prime) -> Result<BigUint> {
    if a == 0 {
        return Err(Error::NonPositive {
            what: "a",
            value: "0".into(),
        });
    }
    let base = BigUint::from(a - 1) * p.get();
    Ok((1..p.get()).fold(BigUint::one(), |acc, j| acc * (&base + j)))
}

static FACTORIALS: OnceLock<RwLock<Vec<BigUint>>> = OnceLock::new();

/// `n!`, memoised across calls.
pub fn factorial(n: u64) -> BigUint {
    let n = n as usize;
    let table = FACTORIALS.get_or_init(|| RwLock::new(vec![BigUint::one()]));
    {
        let read = table.read().expect("factorial table poisoned");
        if let Some(f) = read.get(n) {
            return f.clone();
        }
    }
    let mut write = table.write().expect("factorial table poisoned");
    while write.len() <= n {
        let k = write.len();
        let next = &write[k - 1] * BigUint::from(k);
        write.push(next);
    }
    write[n].clone()
}
