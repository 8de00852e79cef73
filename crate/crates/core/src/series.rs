//! Sparse multivariate power series over Q, truncated by total degree.
//!
//! Terms are kept in a `BTreeMap` keyed by [`MultiIndex`], whose ordering is
//! graded lexicographic: total degree first, then the exponent vectors
//! compared lexicographically. Stored coefficients are never zero and
//! `BigRational` keeps them in lowest terms.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{ordp_rational, Prime};

pub type Rational = BigRational;

/// Exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }

    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    /// The unit vector `e_i`.
    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut v = vec![0; nvars];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when every component stays nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn scale(&self, factor: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|e| e * factor).collect())
    }

    /// All exponent vectors in `nvars` variables of total degree exactly `degree`,
    /// in ascending graded-lex order.
    pub fn of_degree(nvars: usize, degree: u32) -> Vec<MultiIndex> {
        fn rec(nvars: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == nvars {
                prefix.push(remaining);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for e in 0..=remaining {
                prefix.push(e);
                rec(nvars, remaining - e, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if nvars == 0 {
            if degree == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(nvars, degree, &mut Vec::with_capacity(nvars), &mut out);
        out
    }

    /// All exponent vectors of total degree `<= degree`, graded-lex ascending.
    pub fn up_to_degree(nvars: usize, degree: u32) -> Vec<MultiIndex> {
        (0..=degree)
            .flat_map(|d| MultiIndex::of_degree(nvars, d))
            .collect()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `num/den` rendering used by the text format and by reports.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(parse_int(n)?, d))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

pub(crate) mod rational_string {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// A coefficient that failed an integrality test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub exponents: MultiIndex,
    #[serde(with = "rational_string")]
    pub coefficient: Rational,
}

/// Integrality verdict for a series, valid up to `degree_checked`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralityCertificate {
    pub degree_checked: u32,
    pub integral: bool,
    pub witness: Option<Witness>,
}

/// `f(X^p)` together with the degree up to which congruence tests against it
/// are meaningful.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSubstitution {
    pub series: TruncatedSeries,
    pub reliable_degree: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    nvars: usize,
    bound: u32,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl TruncatedSeries {
    pub fn zero(nvars: usize, bound: u32) -> Self {
        TruncatedSeries {
            nvars,
            bound,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize, bound: u32) -> Self {
        Self::constant(nvars, bound, Rational::one())
    }

    pub fn constant(nvars: usize, bound: u32, c: Rational) -> Self {
        let mut s = Self::zero(nvars, bound);
        s.insert(MultiIndex::zero(nvars), c);
        s
    }

    /// The coordinate function `z_i`.
    pub fn variable(nvars: usize, bound: u32, i: usize) -> Result<Self> {
        if i >= nvars {
            return Err(Error::VariableOutOfRange { index: i, nvars });
        }
        let mut s = Self::zero(nvars, bound);
        s.insert(MultiIndex::unit(nvars, i), Rational::one());
        Ok(s)
    }

    /// Builds a series from `(exponents, coefficient)` pairs. Repeated
    /// exponents are summed; terms above `bound` are dropped.
    pub fn from_terms<I>(nvars: usize, bound: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut s = Self::zero(nvars, bound);
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(Error::LengthMismatch {
                    expected: nvars,
                    got: exps.len(),
                });
            }
            s.accumulate(MultiIndex(exps), c);
        }
        s.debug_audit();
        Ok(s)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms
            .get(&MultiIndex(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&vec![0; self.nvars])
    }

    /// Coefficients of a univariate series in degree order `0..=bound`.
    pub fn univariate_coefficients(&self) -> Vec<Rational> {
        assert_eq!(self.nvars, 1, "univariate_coefficients needs one variable");
        (0..=self.bound).map(|d| self.coefficient(&[d])).collect()
    }

    /// Stores a term known to be within the bound, skipping zeros.
    fn insert(&mut self, idx: MultiIndex, c: Rational) {
        if !c.is_zero() && idx.degree() <= self.bound {
            self.terms.insert(idx, c);
        }
    }

    fn accumulate(&mut self, idx: MultiIndex, c: Rational) {
        if c.is_zero() || idx.degree() > self.bound {
            return;
        }
        match self.terms.entry(idx) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Structural audit: index lengths, degree bound, no zero coefficients,
    /// positive denominators.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (idx, c) in &self.terms {
            if idx.len() != self.nvars {
                return Err(format!("index {idx} has wrong length"));
            }
            if idx.degree() > self.bound {
                return Err(format!("index {idx} exceeds bound {}", self.bound));
            }
            if c.is_zero() {
                return Err(format!("zero coefficient stored at {idx}"));
            }
            if !c.denom().is_positive() {
                return Err(format!("non-canonical coefficient at {idx}"));
            }
        }
        Ok(())
    }

    #[inline]
    fn debug_audit(&self) {
        debug_assert!(self.audit().is_ok(), "{:?}", self.audit());
    }

    fn check_same_vars(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::MismatchedVars {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    /// Drops every term of total degree above `bound`.
    pub fn truncate(&self, bound: u32) -> Self {
        let bound = bound.min(self.bound);
        TruncatedSeries {
            nvars: self.nvars,
            bound,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.degree() <= bound)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let bound = self.bound.min(other.bound);
        let mut out = self.truncate(bound);
        for (k, v) in &other.terms {
            out.accumulate(k.clone(), v.clone());
        }
        out.debug_audit();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let bound = self.bound.min(other.bound);
        let mut out = self.truncate(bound);
        for (k, v) in &other.terms {
            out.accumulate(k.clone(), -v.clone());
        }
        out.debug_audit();
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let bound = self.bound.min(other.bound);
        let mut out = Self::zero(self.nvars, bound);
        for (a, ca) in &self.terms {
            let da = a.degree();
            if da > bound {
                break;
            }
            for (b, cb) in &other.terms {
                if da + b.degree() > bound {
                    break;
                }
                out.accumulate(a.add(b), ca * cb);
            }
        }
        out.debug_audit();
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars, self.bound);
        }
        TruncatedSeries {
            nvars: self.nvars,
            bound: self.bound,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v * c))
                .collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut acc = Self::one(self.nvars, self.bound);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Splits into homogeneous components `0..=bound`.
    fn homogeneous_parts(&self) -> Vec<Vec<(MultiIndex, Rational)>> {
        let mut parts = vec![Vec::new(); self.bound as usize + 1];
        for (k, v) in &self.terms {
            parts[k.degree() as usize].push((k.clone(), v.clone()));
        }
        parts
    }

    /// `exp(f)` for `f` without constant term, via the Euler-operator
    /// recurrence `d * g_d = sum_{k=1}^{d} k * f_k * g_{d-k}` on homogeneous parts.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let f = self.homogeneous_parts();
        let mut g: Vec<BTreeMap<MultiIndex, Rational>> = Vec::with_capacity(f.len());
        let mut g0 = BTreeMap::new();
        g0.insert(MultiIndex::zero(self.nvars), Rational::one());
        g.push(g0);
        for d in 1..=self.bound as usize {
            let mut acc: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
            for k in 1..=d {
                if f[k].is_empty() || g[d - k].is_empty() {
                    continue;
                }
                let weight = Rational::from_integer(BigInt::from(k));
                for (a, ca) in &f[k] {
                    let wa = ca * &weight;
                    for (b, cb) in &g[d - k] {
                        *acc.entry(a.add(b)).or_insert_with(Rational::zero) += &wa * cb;
                    }
                }
            }
            let inv_d = Rational::new(BigInt::one(), BigInt::from(d));
            acc.retain(|_, v| !v.is_zero());
            for v in acc.values_mut() {
                *v *= &inv_d;
            }
            g.push(acc);
        }
        let out = TruncatedSeries {
            nvars: self.nvars,
            bound: self.bound,
            terms: g.into_iter().flatten().collect(),
        };
        out.debug_audit();
        Ok(out)
    }

    /// `log(g)` for `g` with constant term 1, inverting the exp recurrence:
    /// `d * f_d = d * g_d - sum_{k=1}^{d-1} k * f_k * g_{d-k}`.
    pub fn log(&self) -> Result<Self> {
        if !self.constant_term().is_one() {
            return Err(Error::ConstantTermNotOne);
        }
        let g = self.homogeneous_parts();
        let mut f: Vec<BTreeMap<MultiIndex, Rational>> = vec![BTreeMap::new()];
        for d in 1..=self.bound as usize {
            let dq = Rational::from_integer(BigInt::from(d));
            let mut acc: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
            for (a, ca) in &g[d] {
                acc.insert(a.clone(), ca * &dq);
            }
            for k in 1..d {
                if f[k].is_empty() || g[d - k].is_empty() {
                    continue;
                }
                let weight = Rational::from_integer(BigInt::from(k));
                for (a, ca) in &f[k] {
                    let wa = ca * &weight;
                    for (b, cb) in &g[d - k] {
                        *acc.entry(a.add(b)).or_insert_with(Rational::zero) -= &wa * cb;
                    }
                }
            }
            let inv_d = Rational::new(BigInt::one(), BigInt::from(d));
            acc.retain(|_, v| !v.is_zero());
            for v in acc.values_mut() {
                *v *= &inv_d;
            }
            f.push(acc);
        }
        let out = TruncatedSeries {
            nvars: self.nvars,
            bound: self.bound,
            terms: f.into_iter().flatten().collect(),
        };
        out.debug_audit();
        Ok(out)
    }

    /// Multiplicative inverse of a series with constant term 1, as `exp(-log g)`.
    pub(crate) fn unit_inverse(&self) -> Result<Self> {
        (-&self.log()?).exp()
    }

    /// `theta_i = z_i d/dz_i`: multiplies each coefficient by its i-th exponent.
    pub fn theta(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::VariableOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        let mut out = Self::zero(self.nvars, self.bound);
        for (k, v) in &self.terms {
            let e = k.0[i];
            if e != 0 {
                out.terms
                    .insert(k.clone(), v * Rational::from_integer(BigInt::from(e)));
            }
        }
        out.debug_audit();
        Ok(out)
    }

    /// Total-degree Euler operator `sum_i theta_i`.
    pub fn euler(&self) -> Self {
        let mut out = Self::zero(self.nvars, self.bound);
        for (k, v) in &self.terms {
            let d = k.degree();
            if d != 0 {
                out.terms
                    .insert(k.clone(), v * Rational::from_integer(BigInt::from(d)));
            }
        }
        out
    }

    /// `f(X^p)`: every exponent multiplied by `p`. The bound is kept; terms
    /// pushed above it are dropped and the reliable degree is `bound / p`.
    pub fn substitute_powers(&self, p: u32) -> Result<PowerSubstitution> {
        if p == 0 {
            return Err(Error::NonPositive {
                what: "power",
                value: "0".into(),
            });
        }
        let mut out = Self::zero(self.nvars, self.bound);
        for (k, v) in &self.terms {
            let scaled = k.scale(p);
            if scaled.degree() <= self.bound {
                out.terms.insert(scaled, v.clone());
            }
        }
        out.debug_audit();
        Ok(PowerSubstitution {
            series: out,
            reliable_degree: self.bound / p,
        })
    }

    /// Sets `z_i = 0`.
    pub fn restrict_to_zero(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::VariableOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        Ok(TruncatedSeries {
            nvars: self.nvars,
            bound: self.bound,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.0[i] == 0)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        })
    }

    /// True when no stored monomial involves `z_i`.
    pub fn is_independent_of(&self, i: usize) -> bool {
        self.terms.keys().all(|k| k.0[i] == 0)
    }

    /// Integrality over Z: every coefficient has denominator 1.
    pub fn is_integral(&self) -> IntegralityCertificate {
        let witness = self
            .terms
            .iter()
            .find(|(_, c)| !c.is_integer())
            .map(|(k, c)| Witness {
                exponents: k.clone(),
                coefficient: c.clone(),
            });
        IntegralityCertificate {
            degree_checked: self.bound,
            integral: witness.is_none(),
            witness,
        }
    }

    /// p-integrality (`ord_p >= 0`) of every coefficient up to `degree`.
    pub fn is_p_integral(&self, p: Prime, degree: u32) -> IntegralityCertificate {
        let degree = degree.min(self.bound);
        let witness = self
            .terms
            .iter()
            .take_while(|(k, _)| k.degree() <= degree)
            .find(|(_, c)| !ordp_rational(c, p).at_least(0))
            .map(|(k, c)| Witness {
                exponents: k.clone(),
                coefficient: c.clone(),
            });
        IntegralityCertificate {
            degree_checked: degree,
            integral: witness.is_none(),
            witness,
        }
    }

    /// Divides by the monomial `z_i`, assuming every term contains it.
    pub fn divide_by_variable(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::VariableOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        let unit = MultiIndex::unit(self.nvars, i);
        let mut out = Self::zero(self.nvars, self.bound.saturating_sub(1));
        for (k, v) in &self.terms {
            let shifted = k.checked_sub(&unit).ok_or_else(|| {
                Error::ShapeMismatch(format!("term {k} is not divisible by z_{i}"))
            })?;
            out.terms.insert(shifted, v.clone());
        }
        Ok(out)
    }

    /// Multiplies by the monomial `z_i`, raising the bound by one.
    pub fn multiply_by_variable(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::VariableOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        let unit = MultiIndex::unit(self.nvars, i);
        Ok(TruncatedSeries {
            nvars: self.nvars,
            bound: self.bound + 1,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.add(&unit), v.clone()))
                .collect(),
        })
    }

    /// Canonical text form: one `e0 e1 ... : num/den` line per term,
    /// graded-lex ascending.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.terms {
            let exps: Vec<String> = k.0.iter().map(u32::to_string).collect();
            out.push_str(&exps.join(" "));
            out.push_str(" : ");
            out.push_str(&format_rational(v));
            out.push('\n');
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_text(text: &str, nvars: usize, bound: u32) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("line {}: missing ':'", lineno + 1)))?;
            let exps = lhs
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            terms.push((exps, parse_rational(rhs)?));
        }
        Self::from_terms(nvars, bound, terms)
    }
}

/// One of the three truncated ring operations; the result bound is the
/// smaller of the two.
pub fn series_arith(lhs: &TruncatedSeries, rhs: &TruncatedSeries, op: ArithOp) -> Result<TruncatedSeries> {
    match op {
        ArithOp::Add => lhs.checked_add(rhs),
        ArithOp::Sub => lhs.checked_sub(rhs),
        ArithOp::Mul => lhs.checked_mul(rhs),
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.checked_add(rhs).expect("series variable counts differ")
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.checked_sub(rhs).expect("series variable counts differ")
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.checked_mul(rhs).expect("series variable counts differ")
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries {
            nvars: self.nvars,
            bound: self.bound,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `det(delta_ij + theta_i f_j)` for `n + 1` series in `n + 1` variables.
/// Cofactor expansion up to 4x4, fraction-free elimination above.
pub fn det_theta_jacobian(fs: &[TruncatedSeries]) -> Result<TruncatedSeries> {
    let size = fs.len();
    if size == 0 {
        return Err(Error::ShapeMismatch("empty family".into()));
    }
    let nvars = fs[0].nvars;
    let bound = fs[0].bound;
    for f in fs {
        if f.nvars != size {
            return Err(Error::ShapeMismatch(format!(
                "{size} series but a series has {} variables",
                f.nvars
            )));
        }
        if f.bound != bound {
            return Err(Error::ShapeMismatch("series bounds differ".into()));
        }
        if !f.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
    }
    let matrix = theta_matrix(fs, (0..size).collect::<Vec<_>>().as_slice())?;
    let det = if size <= 4 {
        cofactor_determinant(&matrix, nvars, bound)
    } else {
        bareiss_determinant(matrix)?
    };
    det.debug_audit();
    Ok(det)
}

/// Matrix `(delta_ij + theta_i f_j)` restricted to the listed variable/series
/// indices (rows are theta indices, columns are series indices).
pub(crate) fn theta_matrix(
    fs: &[TruncatedSeries],
    indices: &[usize],
) -> Result<Vec<Vec<TruncatedSeries>>> {
    let nvars = fs[0].nvars;
    let bound = fs[0].bound;
    let mut matrix = Vec::with_capacity(indices.len());
    for (r, &i) in indices.iter().enumerate() {
        let mut row = Vec::with_capacity(indices.len());
        for (c, &j) in indices.iter().enumerate() {
            let mut entry = fs[j].theta(i)?;
            if r == c {
                entry = &entry + &TruncatedSeries::one(nvars, bound);
            }
            row.push(entry);
        }
        matrix.push(row);
    }
    Ok(matrix)
}

pub(crate) fn cofactor_determinant(
    m: &[Vec<TruncatedSeries>],
    nvars: usize,
    bound: u32,
) -> TruncatedSeries {
    fn minor(m: &[Vec<TruncatedSeries>], skip_col: usize) -> Vec<Vec<TruncatedSeries>> {
        m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != skip_col)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect()
    }
    match m.len() {
        0 => TruncatedSeries::one(nvars, bound),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = TruncatedSeries::zero(nvars, bound);
            for (c, entry) in m[0].iter().enumerate() {
                if entry.is_zero() {
                    continue;
                }
                let term = entry * &cofactor_determinant(&minor(m, c), nvars, bound);
                acc = if c % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

/// Bareiss elimination. Every leading principal minor of `I + (theta f)` is
/// a unit, so divisions are exact and done through the unit inverse.
pub(crate) fn bareiss_determinant(mut m: Vec<Vec<TruncatedSeries>>) -> Result<TruncatedSeries> {
    let size = m.len();
    let nvars = m[0][0].nvars;
    let bound = m[0][0].bound;
    let mut prev = TruncatedSeries::one(nvars, bound);
    for k in 0..size.saturating_sub(1) {
        let prev_inv = prev.unit_inverse()?;
        for i in (k + 1)..size {
            for j in (k + 1)..size {
                let num = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = &num * &prev_inv;
            }
        }
        prev = m[k][k].clone();
    }
    Ok(m[size - 1][size - 1].clone())
}
