//! Dwork-lemma certification of `exp(f)` integrality and the generating
//! series whose exponentials are claimed integral.
//!
//! A [`DworkReport`] pairs the direct check (is `exp(f)` integral up to the
//! bound) with the per-prime congruence `f(X^p) - p f(X) in p Z_p[[X]]`,
//! the latter tested up to `bound / p`. Neither half says anything about
//! degrees beyond what it records.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{factorial, ordp_rational, Prime};
use crate::series::{IntegralityCertificate, MultiIndex, Rational, TruncatedSeries, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeCongruence {
    pub congruence_holds: bool,
    pub reliable_degree: u32,
    /// First coefficient of `f(X^p) - p f(X)` outside `p Z_p`.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DworkReport {
    pub direct: IntegralityCertificate,
    pub per_prime: BTreeMap<Prime, PrimeCongruence>,
}

impl DworkReport {
    pub fn all_congruences_hold(&self) -> bool {
        self.per_prime.values().all(|c| c.congruence_holds)
    }
}

/// Checks `f(X^p) - p f(X)` has every coefficient of degree `<= bound / p`
/// in `p Z_p`.
pub fn dwork_congruence(f: &TruncatedSeries, p: Prime) -> Result<PrimeCongruence> {
    if !f.constant_term().is_zero() {
        return Err(Error::NonzeroConstantTerm);
    }
    let pv = u32::try_from(p.get()).map_err(|_| Error::Overflow(p.to_string()))?;
    let sub = f.substitute_powers(pv)?;
    let scaled = f.scale(&Rational::from_integer(BigInt::from(p.get())));
    let diff = &sub.series - &scaled;
    let witness = diff
        .terms()
        .take_while(|(k, _)| k.degree() <= sub.reliable_degree)
        .find(|(_, c)| !ordp_rational(c, p).at_least(1))
        .map(|(k, c)| Witness {
            exponents: k.clone(),
            coefficient: c.clone(),
        });
    Ok(PrimeCongruence {
        congruence_holds: witness.is_none(),
        reliable_degree: sub.reliable_degree,
        witness,
    })
}

/// Direct integrality of `exp(f)` plus the Dwork congruence at each prime.
pub fn dwork_certify(f: &TruncatedSeries, primes: &[Prime]) -> Result<DworkReport> {
    let direct = f.exp()?.is_integral();
    let mut per_prime = BTreeMap::new();
    for &p in primes {
        per_prime.insert(p, dwork_congruence(f, p)?);
    }
    Ok(DworkReport { direct, per_prime })
}

/// Generating series from the integrality theorems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "theorem")]
pub enum Generator {
    /// `(1/m!) sum_k (mk)!/(k!)^m x^k/k`
    T41 { m: u64 },
    /// `(1/m!) sum (m(k1+k2))!/((k1!)^m (k2!)^m) x1^k1 x2^k2/(k1+k2)`
    T42 { m: u64 },
    /// `sum (m S)!/prod (k_i!)^m x^K / S` in `n` variables, no `1/m!`.
    T43 { m: u64, n: usize },
    /// `sum_m (sum k_i m)!/prod (k_i m)! x^m/m` for fixed `k`.
    T44a { ks: Vec<u64> },
    /// `sum_m (sum k_i m)!/prod (k_i m)! x^m/(sum k_i m)`, requires `gcd(k) = 1`.
    T44b { ks: Vec<u64> },
    /// `(1/m!) sum (m S)!/prod (k_i!)^m x^K / S` in `n` variables.
    T45 { m: u64, n: usize },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::T41 { .. } => "T41",
            Generator::T42 { .. } => "T42",
            Generator::T43 { .. } => "T43",
            Generator::T44a { .. } => "T44a",
            Generator::T44b { .. } => "T44b",
            Generator::T45 { .. } => "T45",
        }
    }

    pub fn params(&self) -> String {
        let join = |ks: &[u64]| {
            ks.iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Generator::T41 { m } | Generator::T42 { m } => format!("m={m}"),
            Generator::T43 { m, n } | Generator::T45 { m, n } => format!("m={m};n={n}"),
            Generator::T44a { ks } | Generator::T44b { ks } => format!("k={}", join(ks)),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.params())
    }
}

fn int(n: u64) -> BigInt {
    BigInt::from(n)
}

/// `(m S)! / prod (k_i!)^m` with `S = sum k_i`.
fn block_multinomial(m: u64, ks: &[u32]) -> BigUint {
    let s: u64 = ks.iter().map(|&k| k as u64).sum();
    let den: BigUint = ks
        .iter()
        .map(|&k| num_traits::pow(factorial(k as u64), m as usize))
        .product();
    factorial(m * s) / den
}

fn require_positive(what: &'static str, v: u64) -> Result<()> {
    if v == 0 {
        Err(Error::NonPositive {
            what,
            value: "0".into(),
        })
    } else {
        Ok(())
    }
}

/// The exact truncated series `f` whose exponential the theorem asserts integral.
pub fn generate(generator: &Generator, bound: u32) -> Result<TruncatedSeries> {
    match generator {
        Generator::T41 { m } => {
            require_positive("m", *m)?;
            many_variable(*m, 1, true, bound)
        }
        Generator::T42 { m } => {
            require_positive("m", *m)?;
            many_variable(*m, 2, true, bound)
        }
        Generator::T43 { m, n } => {
            require_positive("m", *m)?;
            require_positive("n", *n as u64)?;
            many_variable(*m, *n, false, bound)
        }
        Generator::T45 { m, n } => {
            require_positive("m", *m)?;
            require_positive("n", *n as u64)?;
            many_variable(*m, *n, true, bound)
        }
        Generator::T44a { ks } | Generator::T44b { ks } => {
            if ks.is_empty() {
                return Err(Error::EmptyRange("k"));
            }
            for &k in ks {
                require_positive("k_i", k)?;
            }
            let by_total = matches!(generator, Generator::T44b { .. });
            if by_total && ks.iter().fold(0u64, |g, &k| g.gcd(&k)) != 1 {
                return Err(Error::HypothesisViolation {
                    prop: "T44b".into(),
                    reason: "gcd(k_1..k_n) != 1".into(),
                });
            }
            let s: u64 = ks.iter().sum();
            let terms = (1..=bound as u64).map(|m| {
                let num = factorial(s * m);
                let den: BigUint = ks.iter().map(|&k| factorial(k * m)).product();
                let weight = if by_total { s * m } else { m };
                (
                    vec![m as u32],
                    Rational::new(BigInt::from(num), BigInt::from(den) * int(weight)),
                )
            });
            TruncatedSeries::from_terms(1, bound, terms)
        }
    }
}

fn many_variable(m: u64, n: usize, with_m_factorial: bool, bound: u32) -> Result<TruncatedSeries> {
    let prefactor = if with_m_factorial {
        BigInt::from(factorial(m))
    } else {
        BigInt::one()
    };
    let terms = MultiIndex::up_to_degree(n, bound)
        .into_iter()
        .filter(|k| !k.is_zero())
        .map(|k| {
            let s = k.degree() as u64;
            let num = BigInt::from(block_multinomial(m, k.as_slice()));
            (k.into_vec(), Rational::new(num, &prefactor * int(s)))
        });
    TruncatedSeries::from_terms(n, bound, terms)
}

/// Report shape used for JSON output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremCertification {
    pub theorem: String,
    pub params: String,
    pub bound: u32,
    pub direct: IntegralityCertificate,
    pub per_prime: BTreeMap<Prime, PrimeCongruence>,
}

impl TheoremCertification {
    pub fn passes(&self) -> bool {
        self.direct.integral && self.per_prime.values().all(|c| c.congruence_holds)
    }
}

/// Generates the theorem's series and certifies it.
pub fn certify_theorem(generator: &Generator, bound: u32, primes: &[Prime]) -> Result<TheoremCertification> {
    let f = generate(generator, bound)?;
    let report = dwork_certify(&f, primes)?;
    Ok(TheoremCertification {
        theorem: generator.name().into(),
        params: generator.params(),
        bound,
        direct: report.direct,
        per_prime: report.per_prime,
    })
}
