//! Valuation margins for the multinomial congruences.
//!
//! Every statement is reduced to a single integer-or-infinity `margin`:
//! membership claims (`X in Z_p`) report `ord_p(X)`, inequality claims
//! (`ord_p(A - B) >= bound`) report `ord_p(A - B) - bound`. A statement holds
//! at a parameter tuple exactly when its margin is nonnegative.
//!
//! Product-shaped expressions are valued through `ord_p(n!)`; expressions
//! involving a difference are evaluated as exact integers first.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{digit_sum_unchecked, ordp_int, ordp_u64, Prime, Valuation};

/// Registry of the congruence statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropositionId {
    /// `(1/sum k) * multinomial(k)` in Z_p when `(p, k_1..k_n) = 1`.
    P1,
    /// `(1/m) * multinomial(mk)` in Z_p when `(p, m) = 1`.
    P1_1,
    /// `(1/(m sum k)) * multinomial(mk)` in Z_p when `(p, m) = 1`
    /// and `(p, k_1..k_n) = 1`.
    P1_2,
    /// `(1/sum k) * multinomial(mk)` in Z when `gcd(k) = 1`.
    P1_3,
    /// Factorial-ratio difference: with `p | k_i`,
    /// `ord_p(S!/(S/p)! - prod k_i!/(k_i/p)!) >= S/p + min ord_p(k_i)`.
    RatioDiff,
    /// `(1/S)(multinomial(k) - multinomial(k/p))` in Z_p when `p | k_i`.
    P3,
    /// The `P3` statement applied to `mk` with `p | m`.
    P3_1,
    /// `(1/m!) multinomial(n,..,n)` in Z_p.
    P4,
    /// Stronger form of `P4`: `(1/(m m!)) multinomial(n,..,n)` in Z_p when `S_p(n) > 1`.
    P4Strong,
    /// Power version of the ratio difference: with `n = p^r a`,
    /// `ord_p((mn)!/(mn/p)! - (n!/(n/p)!)^m) >= m n/p + r`.
    RatioPower,
    /// `(1/(m! n))(multinomial(n;m) - multinomial(n/p;m))` in Z_p when `p | n`.
    P6,
    /// `(m(k+l))! / (m! (k+l)^m (k!)^m (l!)^m)` in Z_p when `(p, k, l) = 1`.
    P7,
    /// `ord_p((m(k+l))!/(m(k+l)/p)! - (k! l!/((k/p)!(l/p)!))^m)` bound,
    /// with the separate `p = 2`, `m` and `l/2` odd branch.
    P8,
    /// Two-block analogue of `P6`, `p | k`, `p | l`.
    P9,
    /// `gcd(k)^m (mS)! / (m! S^m prod (k_i!)^m)` in Z.
    Pc2,
    /// `(1/p)(1/(m! S^m))((mSp)!/prod((k_i p)!)^m - (mS)!/prod(k_i!)^m)` in Z_p.
    Pc3,
}

impl PropositionId {
    pub const ALL: [PropositionId; 16] = [
        PropositionId::P1,
        PropositionId::P1_1,
        PropositionId::P1_2,
        PropositionId::P1_3,
        PropositionId::RatioDiff,
        PropositionId::P3,
        PropositionId::P3_1,
        PropositionId::P4,
        PropositionId::P4Strong,
        PropositionId::RatioPower,
        PropositionId::P6,
        PropositionId::P7,
        PropositionId::P8,
        PropositionId::P9,
        PropositionId::Pc2,
        PropositionId::Pc3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PropositionId::P1 => "P1",
            PropositionId::P1_1 => "P1_1",
            PropositionId::P1_2 => "P1_2",
            PropositionId::P1_3 => "P1_3",
            PropositionId::RatioDiff => "P_ratio_diff",
            PropositionId::P3 => "P3",
            PropositionId::P3_1 => "P3_1",
            PropositionId::P4 => "P4",
            PropositionId::P4Strong => "P4_strong",
            PropositionId::RatioPower => "P_ratio_power",
            PropositionId::P6 => "P6",
            PropositionId::P7 => "P7",
            PropositionId::P8 => "P8",
            PropositionId::P9 => "P9",
            PropositionId::Pc2 => "PC2",
            PropositionId::Pc3 => "PC3",
        }
    }

    pub fn shape(self) -> ParamShape {
        use PropositionId::*;
        match self {
            P1 | RatioDiff | P3 => ParamShape::Parts,
            P1_1 | P1_2 | P1_3 | P3_1 | Pc2 | Pc3 => ParamShape::Scaled,
            P4 | P4Strong | RatioPower | P6 => ParamShape::Uniform,
            P7 | P8 | P9 => ParamShape::Pair,
        }
    }

    /// Statements whose value is unchanged by permuting `k_1..k_n`.
    pub fn is_symmetric(self) -> bool {
        matches!(self.shape(), ParamShape::Parts | ParamShape::Scaled)
    }

    /// Zero parts are admissible (the statement asks `k_i >= 0`).
    fn allows_zero_parts(self) -> bool {
        matches!(
            self,
            PropositionId::P1 | PropositionId::RatioDiff | PropositionId::P3
        )
    }
}

impl fmt::Display for PropositionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropositionId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PropositionId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown proposition {s:?}")))
    }
}

impl Serialize for PropositionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PropositionId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamShape {
    /// `k_1..k_n`
    Parts,
    /// `m; k_1..k_n`
    Scaled,
    /// `m; n`
    Uniform,
    /// `m; k; l`
    Pair,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Params {
    Parts(Vec<u64>),
    Scaled { m: u64, ks: Vec<u64> },
    Uniform { m: u64, n: u64 },
    Pair { m: u64, k: u64, l: u64 },
}

impl Params {
    pub fn shape(&self) -> ParamShape {
        match self {
            Params::Parts(_) => ParamShape::Parts,
            Params::Scaled { .. } => ParamShape::Scaled,
            Params::Uniform { .. } => ParamShape::Uniform,
            Params::Pair { .. } => ParamShape::Pair,
        }
    }

    /// Flattened tuple, used for ordering sweeps.
    pub fn as_tuple(&self) -> Vec<u64> {
        match self {
            Params::Parts(ks) => ks.clone(),
            Params::Scaled { m, ks } => std::iter::once(*m).chain(ks.iter().copied()).collect(),
            Params::Uniform { m, n } => vec![*m, *n],
            Params::Pair { m, k, l } => vec![*m, *k, *l],
        }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ks: &[u64]| {
            ks.iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Params::Parts(ks) => write!(f, "k={}", join(ks)),
            Params::Scaled { m, ks } => write!(f, "m={m};k={}", join(ks)),
            Params::Uniform { m, n } => write!(f, "m={m};n={n}"),
            Params::Pair { m, k, l } => write!(f, "m={m};k={k};l={l}"),
        }
    }
}

impl Serialize for Params {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Which case of the `P8` bound was applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `p` odd, or `p = 2` with `m` or `l/2` even.
    General,
    /// `p = 2` with `m` and `l/2` both odd.
    TwoOdd,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::General => "general",
            Branch::TwoOdd => "p2_odd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarginReport {
    pub prop: PropositionId,
    pub params: Params,
    #[serde(rename = "p")]
    pub prime: Prime,
    pub margin: Valuation,
    pub holds: bool,
    pub branch: Option<Branch>,
}

/// `(sum k_i)! / prod k_i!`, built as a product of binomials
/// `C(k_1 + .. + k_i, k_i)` so intermediates stay at the size of the result.
pub fn multinomial(ks: &[u64]) -> Result<BigUint> {
    if ks.iter().all(|&k| k == 0) {
        return Err(Error::NonPositive {
            what: "multinomial total",
            value: "0".into(),
        });
    }
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &k in ks {
        total += k;
        acc *= binomial(total, k);
    }
    Ok(acc)
}

pub(crate) fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `prod_{j = lo+1}^{hi} j` by binary splitting.
fn range_product(lo: u64, hi: u64) -> BigUint {
    match hi.saturating_sub(lo) {
        0 => BigUint::one(),
        1 => BigUint::from(hi),
        2 => BigUint::from(hi) * (hi - 1),
        _ => {
            let mid = lo + (hi - lo) / 2;
            range_product(lo, mid) * range_product(mid, hi)
        }
    }
}

/// `a! / b!` for `b <= a`.
fn factorial_ratio(a: u64, b: u64) -> BigUint {
    debug_assert!(b <= a);
    range_product(b, a)
}

fn violation(prop: PropositionId, reason: impl Into<String>) -> Error {
    Error::HypothesisViolation {
        prop: prop.as_str().into(),
        reason: reason.into(),
    }
}

fn shape_error(prop: PropositionId, params: &Params) -> Error {
    Error::InvalidParams {
        prop: prop.as_str().into(),
        reason: format!("expected {:?} parameters, got {params}", prop.shape()),
    }
}

struct Ctx {
    p: u64,
}

impl Ctx {
    /// `ord_p(n!)`
    fn vf(&self, n: u64) -> i64 {
        if n == 0 {
            0
        } else {
            ((n - digit_sum_unchecked(n, self.p)) / (self.p - 1)) as i64
        }
    }

    /// `ord_p(n)` for `n > 0`
    fn vi(&self, n: u64) -> i64 {
        ordp_u64(n, self.p) as i64
    }

    fn divides(&self, n: u64) -> bool {
        n % self.p == 0
    }

    fn vdiff(&self, a: BigUint, b: BigUint) -> Valuation {
        ordp_int(&(BigInt::from(a) - BigInt::from(b)), Prime::new(self.p).expect("prime"))
    }
}

fn require_positive(prop: PropositionId, values: &[u64]) -> Result<()> {
    if values.iter().any(|&v| v == 0) {
        return Err(violation(prop, "parameters must be positive"));
    }
    Ok(())
}

/// Exact p-adic margin of one statement at one parameter tuple.
pub fn margin(prop: PropositionId, params: &Params, p: Prime) -> Result<MarginReport> {
    use PropositionId::*;
    if params.shape() != prop.shape() {
        return Err(shape_error(prop, params));
    }
    let ctx = Ctx { p: p.get() };
    let mut branch = None;
    let value: Valuation = match (prop, params) {
        (P1, Params::Parts(ks)) => {
            let s = parts_sum(prop, ks)?;
            if ks.iter().all(|&k| ctx.divides(k)) {
                return Err(violation(prop, format!("{p} divides every k_i")));
            }
            let v = ctx.vf(s) - ks.iter().map(|&k| ctx.vf(k)).sum::<i64>() - ctx.vi(s);
            Valuation::Finite(v)
        }
        (P1_1 | P1_2 | P1_3, Params::Scaled { m, ks }) => {
            let (m, s) = scaled_sum(prop, *m, ks)?;
            if matches!(prop, P1_1 | P1_2) && ctx.divides(m) {
                return Err(violation(prop, format!("{p} divides m")));
            }
            if prop == P1_2 && ks.iter().all(|&k| ctx.divides(k)) {
                return Err(violation(prop, format!("{p} divides every k_i")));
            }
            if prop == P1_3 && ks.iter().fold(0u64, |g, &k| g.gcd(&k)) != 1 {
                return Err(violation(prop, "gcd(k_1..k_n) != 1"));
            }
            let body = ctx.vf(m * s) - ks.iter().map(|&k| ctx.vf(m * k)).sum::<i64>();
            let denominator = match prop {
                P1_1 => ctx.vi(m),
                P1_2 => ctx.vi(m * s),
                _ => ctx.vi(s),
            };
            Valuation::Finite(body - denominator)
        }
        (RatioDiff | P3, Params::Parts(ks)) => {
            let s = parts_sum(prop, ks)?;
            if !ks.iter().all(|&k| ctx.divides(k)) {
                return Err(violation(prop, format!("{p} does not divide every k_i")));
            }
            let reduced: Vec<u64> = ks.iter().map(|k| k / ctx.p).collect();
            if prop == P3 {
                let diff = ctx.vdiff(multinomial(ks)?, multinomial(&reduced)?);
                diff - ctx.vi(s)
            } else {
                let a = factorial_ratio(s, s / ctx.p);
                let b = ks
                    .iter()
                    .fold(BigUint::one(), |acc, &k| acc * factorial_ratio(k, k / ctx.p));
                let min_ord = ks
                    .iter()
                    .filter(|&&k| k > 0)
                    .map(|&k| ctx.vi(k))
                    .min()
                    .expect("some k_i is positive");
                ctx.vdiff(a, b) - ((s / ctx.p) as i64 + min_ord)
            }
        }
        (P3_1, Params::Scaled { m, ks }) => {
            let (m, s) = scaled_sum(prop, *m, ks)?;
            if !ctx.divides(m) {
                return Err(violation(prop, format!("{p} does not divide m")));
            }
            let full: Vec<u64> = ks.iter().map(|k| k * m).collect();
            let reduced: Vec<u64> = full.iter().map(|k| k / ctx.p).collect();
            ctx.vdiff(multinomial(&full)?, multinomial(&reduced)?) - ctx.vi(m * s)
        }
        (P4 | P4Strong, Params::Uniform { m, n }) => {
            require_positive(prop, &[*m, *n])?;
            if prop == P4Strong && digit_sum_unchecked(*n, ctx.p) <= 1 {
                return Err(violation(prop, format!("S_{p}(n) = 1")));
            }
            let mut v = ctx.vf(m * n) - (*m as i64) * ctx.vf(*n) - ctx.vf(*m);
            if prop == P4Strong {
                v -= ctx.vi(*m);
            }
            Valuation::Finite(v)
        }
        (RatioPower, Params::Uniform { m, n }) => {
            require_positive(prop, &[*m, *n])?;
            if !ctx.divides(*n) {
                return Err(violation(prop, format!("{p} does not divide n")));
            }
            let r = ctx.vi(*n);
            let (observed, bound) = ratio_power(&ctx, *m, *n, r);
            observed - bound
        }
        (P6, Params::Uniform { m, n }) => {
            require_positive(prop, &[*m, *n])?;
            if !ctx.divides(*n) {
                return Err(violation(prop, format!("{p} does not divide n")));
            }
            let a = multinomial(&vec![*n; *m as usize])?;
            let b = multinomial(&vec![*n / ctx.p; *m as usize])?;
            ctx.vdiff(a, b) - (ctx.vf(*m) + ctx.vi(*n))
        }
        (P7, Params::Pair { m, k, l }) => {
            require_positive(prop, &[*m, *k, *l])?;
            if ctx.divides(*k) && ctx.divides(*l) {
                return Err(violation(prop, format!("{p} divides both k and l")));
            }
            let (m_, kl) = (*m as i64, k + l);
            let v = ctx.vf(m * kl)
                - m_ * (ctx.vf(*k) + ctx.vf(*l))
                - ctx.vf(*m)
                - m_ * ctx.vi(kl);
            Valuation::Finite(v)
        }
        (P8, Params::Pair { m, k, l }) => {
            require_positive(prop, &[*m, *k, *l])?;
            if !(ctx.divides(*k) && ctx.divides(*l)) {
                return Err(violation(prop, format!("{p} does not divide both k and l")));
            }
            let kl = k + l;
            let a = factorial_ratio(m * kl, m * kl / ctx.p);
            let block = factorial_ratio(*k, k / ctx.p) * factorial_ratio(*l, l / ctx.p);
            let b = num_traits::pow(block, *m as usize);
            let observed = ctx.vdiff(a, b);
            let two_odd = ctx.p == 2 && m % 2 == 1 && (l / 2) % 2 == 1;
            let bound = if two_odd {
                branch = Some(Branch::TwoOdd);
                (m * kl / 2) as i64 + 1
            } else {
                branch = Some(Branch::General);
                (m * kl / ctx.p) as i64 + ctx.vi(kl)
            };
            observed - bound
        }
        (P9, Params::Pair { m, k, l }) => {
            require_positive(prop, &[*m, *k, *l])?;
            if !(ctx.divides(*k) && ctx.divides(*l)) {
                return Err(violation(prop, format!("{p} does not divide both k and l")));
            }
            let mu = *m as usize;
            let kl = k + l;
            let a = multinomial(&[vec![*k; mu], vec![*l; mu]].concat())?;
            let b = multinomial(&[vec![k / ctx.p; mu], vec![l / ctx.p; mu]].concat())?;
            ctx.vdiff(a, b) - (ctx.vf(*m) + ctx.vi(kl))
        }
        (Pc2, Params::Scaled { m, ks }) => {
            let (m, s) = scaled_sum(prop, m.to_owned(), ks)?;
            let g = ks.iter().fold(0u64, |g, &k| g.gcd(&k));
            let m_ = m as i64;
            let v = m_ * ctx.vi(g) - ctx.vf(m) - m_ * ctx.vi(s) + ctx.vf(m * s)
                - m_ * ks.iter().map(|&k| ctx.vf(k)).sum::<i64>();
            Valuation::Finite(v)
        }
        (Pc3, Params::Scaled { m, ks }) => {
            let (m, s) = scaled_sum(prop, *m, ks)?;
            let mu = m as usize;
            let lifted: Vec<u64> = ks
                .iter()
                .flat_map(|&k| std::iter::repeat(k * ctx.p).take(mu))
                .collect();
            let base: Vec<u64> = ks
                .iter()
                .flat_map(|&k| std::iter::repeat(k).take(mu))
                .collect();
            let diff = ctx.vdiff(multinomial(&lifted)?, multinomial(&base)?);
            diff - (1 + ctx.vf(m) + (m as i64) * ctx.vi(s))
        }
        _ => return Err(shape_error(prop, params)),
    };
    Ok(MarginReport {
        prop,
        params: params.clone(),
        prime: p,
        margin: value,
        holds: value.at_least(0),
        branch,
    })
}

fn parts_sum(prop: PropositionId, ks: &[u64]) -> Result<u64> {
    let s: u64 = ks.iter().sum();
    if ks.is_empty() || s == 0 {
        return Err(violation(prop, "sum of k_i must be positive"));
    }
    Ok(s)
}

fn scaled_sum(prop: PropositionId, m: u64, ks: &[u64]) -> Result<(u64, u64)> {
    if ks.is_empty() {
        return Err(violation(prop, "need at least one k_i"));
    }
    require_positive(prop, &[m])?;
    require_positive(prop, ks)?;
    Ok((m, ks.iter().sum()))
}

/// Observed valuation and lower bound for
/// `(mn)!/(mn/p)! - (n!/(n/p)!)^m` with `n = p^r a`.
fn ratio_power(ctx: &Ctx, m: u64, n: u64, r: i64) -> (Valuation, i64) {
    let a = factorial_ratio(m * n, m * n / ctx.p);
    let b = num_traits::pow(factorial_ratio(n, n / ctx.p), m as usize);
    (ctx.vdiff(a, b), (m * n / ctx.p) as i64 + r)
}

/// One row of the conjecture comparison table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjectureProbeRow {
    pub p: Prime,
    pub r: u32,
    pub a: u64,
    pub m: u64,
    pub observed: Valuation,
    pub predicted: i64,
    /// The difference vanishes (observed is infinite); excluded from comparison.
    pub degenerate: bool,
    /// `m p^(r-1) a + r`, the proven lower bound.
    pub lower_bound: i64,
    pub bound_holds: bool,
    /// `observed == predicted`, absent for degenerate rows.
    pub matches: Option<bool>,
}

/// Evaluates `ord_p((m p^r a)!/(m p^(r-1) a)! - ((p^r a)!/(p^(r-1) a)!)^m)` and
/// compares it against the conjectured closed form.
pub fn conjecture_probe(p: Prime, r: u32, a: u64, m: u64) -> Result<ConjectureProbeRow> {
    let prop = "conjecture";
    let hyp = |reason: String| Error::HypothesisViolation {
        prop: prop.into(),
        reason,
    };
    if r == 0 {
        return Err(Error::NonPositive {
            what: "r",
            value: "0".into(),
        });
    }
    if a == 0 || m == 0 {
        return Err(Error::NonPositive {
            what: "a and m",
            value: "0".into(),
        });
    }
    if a % p.get() == 0 {
        return Err(hyp(format!("{p} divides a = {a}")));
    }
    if p.get() == 2 {
        return Err(hyp("the conjectured formula covers odd primes only".into()));
    }
    let n = p.pow(r)?.checked_mul(a).ok_or_else(|| Error::Overflow("p^r a".into()))?;
    let ctx = Ctx { p: p.get() };
    let (observed, lower_bound) = ratio_power(&ctx, m, n, r as i64);
    let base = (m * n / p.get()) as i64;
    let predicted = if p.get() == 3 {
        base + 3 * r as i64 - 1
    } else {
        base + 3 * r as i64
    };
    let degenerate = observed == Valuation::Infinite;
    Ok(ConjectureProbeRow {
        p,
        r,
        a,
        m,
        observed,
        predicted,
        degenerate,
        lower_bound,
        bound_holds: degenerate || observed.at_least(lower_bound),
        matches: (!degenerate).then(|| observed == Valuation::Finite(predicted)),
    })
}

/// Parameter grid for a sweep. Part values double as `n` (uniform
/// statements) and as `k`, `l` (two-block statements).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRanges {
    pub primes: Vec<Prime>,
    pub m: Vec<u64>,
    /// Allowed numbers of parts `n`.
    pub parts: Vec<usize>,
    /// Allowed part values.
    pub k: Vec<u64>,
    /// Enumerate every ordering of `k_1..k_n`; otherwise only non-decreasing
    /// tuples (one per multiset) for the symmetric statements.
    pub ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepOutcome {
    pub prop: PropositionId,
    pub reports: Vec<MarginReport>,
    /// Tuples rejected by the statement's hypotheses.
    pub skipped: usize,
}

impl SweepOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &MarginReport> {
        self.reports.iter().filter(|r| !r.holds)
    }
}

fn tuples(values: &[u64], len: usize, non_decreasing: bool) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(values: &[u64], len: usize, start: usize, nd: bool, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in (if nd { start } else { 0 })..values.len() {
            cur.push(values[i]);
            rec(values, len, i, nd, cur, out);
            cur.pop();
        }
    }
    rec(values, len, 0, non_decreasing, &mut cur, &mut out);
    out
}

fn candidates(prop: PropositionId, ranges: &SweepRanges) -> Result<Vec<Params>> {
    let mut values = ranges.k.clone();
    values.sort_unstable();
    values.dedup();
    let mut ms = ranges.m.clone();
    ms.sort_unstable();
    ms.dedup();
    if values.is_empty() {
        return Err(Error::EmptyRange("k"));
    }
    if prop.shape() != ParamShape::Parts && ms.is_empty() {
        return Err(Error::EmptyRange("m"));
    }
    let non_decreasing = !ranges.ordered && prop.is_symmetric();
    let mut part_tuples = Vec::new();
    if matches!(prop.shape(), ParamShape::Parts | ParamShape::Scaled) {
        let mut parts = ranges.parts.clone();
        parts.sort_unstable();
        parts.dedup();
        parts.retain(|&n| n > 0);
        if parts.is_empty() {
            return Err(Error::EmptyRange("parts"));
        }
        for n in parts {
            part_tuples.extend(tuples(&values, n, non_decreasing));
        }
    }
    let mut out = Vec::new();
    match prop.shape() {
        ParamShape::Parts => out.extend(part_tuples.into_iter().map(Params::Parts)),
        ParamShape::Scaled => {
            for &m in &ms {
                for ks in &part_tuples {
                    out.push(Params::Scaled { m, ks: ks.clone() });
                }
            }
        }
        ParamShape::Uniform => {
            for &m in &ms {
                for &n in &values {
                    out.push(Params::Uniform { m, n });
                }
            }
        }
        ParamShape::Pair => {
            for &m in &ms {
                for &k in &values {
                    for &l in &values {
                        out.push(Params::Pair { m, k, l });
                    }
                }
            }
        }
    }
    out.sort_by_key(Params::as_tuple);
    Ok(out)
}

/// Evaluates `prop` on every admissible tuple of the grid. Reports are ordered
/// by prime, then lexicographically by parameter tuple; tuples violating the
/// statement's hypotheses (including zero parts where positivity is required)
/// are counted in `skipped`.
pub fn sweep(prop: PropositionId, ranges: &SweepRanges) -> Result<SweepOutcome> {
    if ranges.primes.is_empty() {
        return Err(Error::EmptyRange("primes"));
    }
    let mut primes = ranges.primes.clone();
    primes.sort_unstable();
    primes.dedup();
    let cands = candidates(prop, ranges)?;
    let jobs: Vec<(Prime, &Params)> = primes
        .iter()
        .flat_map(|&p| cands.iter().map(move |c| (p, c)))
        .collect();
    let results: Vec<Result<Option<MarginReport>>> = jobs
        .par_iter()
        .map(|&(p, params)| {
            if !prop.allows_zero_parts() && params.as_tuple().contains(&0) {
                return Ok(None);
            }
            match margin(prop, params, p) {
                Ok(r) => Ok(Some(r)),
                Err(Error::HypothesisViolation { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut reports = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for r in results {
        match r? {
            Some(rep) => reports.push(rep),
            None => skipped += 1,
        }
    }
    Ok(SweepOutcome {
        prop,
        reports,
        skipped,
    })
}

/// CSV with columns `prop,params,p,margin,holds,branch`.
pub fn reports_to_csv(reports: &[MarginReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["prop", "params", "p", "margin", "holds", "branch"])
        .map_err(|e| Error::Parse(e.to_string()))?;
    for r in reports {
        w.write_record([
            r.prop.as_str().to_string(),
            r.params.to_string(),
            r.prime.to_string(),
            r.margin.to_string(),
            r.holds.to_string(),
            r.branch.map(|b| b.as_str().to_string()).unwrap_or_default(),
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
