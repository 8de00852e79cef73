//! Charge systems of toric Calabi-Yau geometries and their closed-string
//! mirror maps.
//!
//! Rows of a [`ChargeSystem`] are stored 0-based. For a base geometry the
//! rows are conventionally labelled `l^(1)..l^(N)`, so label `i` is row
//! `i - 1`; extended brane systems use labels `0..=N` and those coincide
//! with row indices.
//!
//! Mirror maps are returned as unit parts `q_i / z_i`: the `log z_i` piece of
//! `g_1^(i)` is implicit and only the power-series part is ever stored.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::factorial;
use crate::series::{MultiIndex, Rational, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeSystem {
    pub name: String,
    vectors: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
struct RawChargeSystem {
    #[serde(default)]
    name: String,
    vectors: Vec<Vec<i64>>,
}

/// Checks the matrix is rectangular, nonempty, and every row is nonzero and
/// sums to zero.
pub fn validate_charges(vectors: Vec<Vec<i64>>) -> Result<ChargeSystem> {
    ChargeSystem::new("custom", vectors)
}

impl ChargeSystem {
    pub fn new(name: impl Into<String>, vectors: Vec<Vec<i64>>) -> Result<Self> {
        let width = match vectors.first() {
            Some(row) if !row.is_empty() => row.len(),
            _ => return Err(Error::ShapeMismatch("charge matrix is empty".into())),
        };
        for (row, v) in vectors.iter().enumerate() {
            if v.len() != width {
                return Err(Error::LengthMismatch {
                    expected: width,
                    got: v.len(),
                });
            }
            if v.iter().all(|&x| x == 0) {
                return Err(Error::ZeroRow(row));
            }
            let sum: i64 = v.iter().sum();
            if sum != 0 {
                return Err(Error::CyViolation { row, sum });
            }
        }
        Ok(ChargeSystem {
            name: name.into(),
            vectors,
        })
    }

    pub fn local_p2() -> Self {
        ChargeSystem::new("local-p2", vec![vec![-3, 1, 1, 1]]).expect("valid preset")
    }

    pub fn conifold() -> Self {
        ChargeSystem::new("conifold", vec![vec![1, -1, -1, 1]]).expect("valid preset")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "local-p2" => Some(Self::local_p2()),
            "conifold" => Some(Self::conifold()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawChargeSystem =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let name = if raw.name.is_empty() {
            "custom".to_string()
        } else {
            raw.name
        };
        ChargeSystem::new(name, raw.vectors)
    }

    /// Number of charge vectors.
    pub fn rows(&self) -> usize {
        self.vectors.len()
    }

    /// Entries per vector.
    pub fn width(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.vectors[i]
    }

    /// `k_j = sum_i l^(i)_j m_i`.
    pub fn pairing(&self, m: &[u32]) -> Result<Vec<i64>> {
        if m.len() != self.rows() {
            return Err(Error::LengthMismatch {
                expected: self.rows(),
                got: m.len(),
            });
        }
        let mut k = vec![0i64; self.width()];
        for (row, &mi) in self.vectors.iter().zip(m) {
            for (kj, &l) in k.iter_mut().zip(row) {
                *kj += l * mi as i64;
            }
        }
        Ok(k)
    }
}

impl fmt::Display for ChargeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.name, self.vectors)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexClassification {
    pub m: MultiIndex,
    pub k: Vec<i64>,
    pub negatives: usize,
    pub jstar: Option<usize>,
}

pub fn classify(cs: &ChargeSystem, m: &MultiIndex) -> Result<IndexClassification> {
    let k = cs.pairing(m.as_slice())?;
    let neg: Vec<usize> = (0..k.len()).filter(|&j| k[j] < 0).collect();
    Ok(IndexClassification {
        m: m.clone(),
        negatives: neg.len(),
        jstar: if neg.len() == 1 { Some(neg[0]) } else { None },
        k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub degree_checked: u32,
    pub holds: bool,
    pub counterexample: Option<MultiIndex>,
}

fn nonzero_indices(cs: &ChargeSystem, degree: u32) -> impl Iterator<Item = MultiIndex> {
    MultiIndex::up_to_degree(cs.rows(), degree)
        .into_iter()
        .filter(|m| !m.is_zero())
}

fn gcd_all(xs: impl IntoIterator<Item = i64>) -> i64 {
    xs.into_iter().fold(0i64, |g, x| g.gcd(&x))
}

/// No nonzero `m` of total degree `<= degree` has all `k_j >= 0`.
pub fn check_condition_a(cs: &ChargeSystem, degree: u32) -> ConditionReport {
    let counterexample = nonzero_indices(cs, degree).find(|m| {
        classify(cs, m).map(|c| c.negatives == 0).unwrap_or(false)
    });
    ConditionReport {
        condition: Condition::A,
        degree_checked: degree,
        holds: counterexample.is_none(),
        counterexample,
    }
}

/// Every primitive `m` with exactly one negative `k_j` has coprime `k`'s.
pub fn check_condition_b(cs: &ChargeSystem, degree: u32) -> ConditionReport {
    let counterexample = nonzero_indices(cs, degree).find(|m| {
        if gcd_all(m.as_slice().iter().map(|&x| x as i64)) != 1 {
            return false;
        }
        let c = classify(cs, m).expect("length matches");
        c.negatives == 1 && gcd_all(c.k.iter().copied()) != 1
    });
    ConditionReport {
        condition: Condition::B,
        degree_checked: degree,
        holds: counterexample.is_none(),
        counterexample,
    }
}

pub(crate) fn fact(k: i64) -> BigInt {
    debug_assert!(k >= 0);
    BigInt::from(factorial(k as u64))
}

pub(crate) fn sign(exponent: i64) -> BigInt {
    if exponent.rem_euclid(2) == 0 {
        BigInt::from(1)
    } else {
        BigInt::from(-1)
    }
}

/// The `g_1` summand at an index with a single negative column `jstar`:
/// `l_jstar (-1)^k_jstar (-k_jstar - 1)! / prod_{j != jstar} k_j!`.
pub(crate) fn g1_coefficient(l_jstar: i64, k: &[i64], jstar: usize) -> Rational {
    let kstar = k[jstar];
    let num = BigInt::from(l_jstar) * sign(kstar) * fact(-kstar - 1);
    let den: BigInt = k
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != jstar)
        .map(|(_, &kj)| fact(kj))
        .product();
    Rational::new(num, den)
}

fn require_condition_a(cs: &ChargeSystem, degree: u32) -> Result<()> {
    let report = check_condition_a(cs, degree);
    match report.counterexample {
        None => Ok(()),
        Some(m) => Err(Error::ConditionAUnverified {
            degree,
            counterexample: m.into_vec(),
        }),
    }
}

fn check_row(cs: &ChargeSystem, row: usize) -> Result<()> {
    if row >= cs.rows() {
        Err(Error::VariableOutOfRange {
            index: row,
            nvars: cs.rows(),
        })
    } else {
        Ok(())
    }
}

/// Power-series part of `g_1` for charge row `row`, by direct enumeration of
/// the indices with exactly one negative column.
pub fn g1_series(cs: &ChargeSystem, row: usize, degree: u32) -> Result<TruncatedSeries> {
    check_row(cs, row)?;
    require_condition_a(cs, degree)?;
    let l = cs.row(row);
    let mut terms = Vec::new();
    for m in nonzero_indices(cs, degree) {
        let c = classify(cs, &m)?;
        if let Some(j) = c.jstar {
            if l[j] != 0 {
                terms.push((m.into_vec(), g1_coefficient(l[j], &c.k, j)));
            }
        }
    }
    TruncatedSeries::from_terms(cs.rows(), degree, terms)
}

/// Unit part `q_i / z_i = exp(g_1 - log z_i)`.
pub fn mirror_map(cs: &ChargeSystem, row: usize, degree: u32) -> Result<TruncatedSeries> {
    g1_series(cs, row, degree)?.exp()
}

/// Unit parts for every row.
pub fn mirror_maps(cs: &ChargeSystem, degree: u32) -> Result<Vec<TruncatedSeries>> {
    let g1 = (0..cs.rows())
        .map(|i| g1_series(cs, i, degree))
        .collect::<Result<Vec<_>>>()?;
    g1.iter().map(TruncatedSeries::exp).collect()
}

/// Exponents `f_i` with `q_i = z_i exp(f_i)`, one per row.
pub fn mirror_exponents(cs: &ChargeSystem, degree: u32) -> Result<Vec<TruncatedSeries>> {
    (0..cs.rows()).map(|i| g1_series(cs, i, degree)).collect()
}

impl ConditionReport {
    pub fn summary(&self) -> String {
        let verdict = if self.holds { "holds" } else { "fails" };
        match &self.counterexample {
            Some(m) => format!(
                "condition {:?} {verdict} to degree {} (counterexample {m})",
                self.condition, self.degree_checked
            ),
            None => format!(
                "condition {:?} {verdict} to degree {}",
                self.condition, self.degree_checked
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn local_p1xp1() -> ChargeSystem {
        ChargeSystem::new("local-p1xp1", vec![vec![-2, 1, 1, 0, 0], vec![-2, 0, 0, 1, 1]]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(validate_charges(vec![vec![-3, 1, 1, 1]]).is_ok());
        assert!(validate_charges(vec![vec![1, -1, -1, 1]]).is_ok());
        assert_eq!(
            validate_charges(vec![vec![1, 1]]),
            Err(Error::CyViolation { row: 0, sum: 2 })
        );
        assert_eq!(
            validate_charges(vec![vec![1, -1], vec![0, 0]]),
            Err(Error::ZeroRow(1))
        );
        assert!(matches!(
            validate_charges(vec![vec![1, -1], vec![0]]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn json_loader() {
        let cs = ChargeSystem::from_json(r#"{"name":"p2","vectors":[[-3,1,1,1]]}"#).unwrap();
        assert_eq!(cs.vectors(), ChargeSystem::local_p2().vectors());
        assert_eq!(cs.name, "p2");
        assert!(matches!(
            ChargeSystem::from_json(r#"{"vectors":[[1,1]]}"#),
            Err(Error::CyViolation { .. })
        ));
        assert!(matches!(ChargeSystem::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn classify_examples() {
        let c = classify(&ChargeSystem::local_p2(), &MultiIndex::new(vec![2])).unwrap();
        assert_eq!(c.k, vec![-6, 2, 2, 2]);
        assert_eq!((c.negatives, c.jstar), (1, Some(0)));
        let c = classify(&ChargeSystem::local_p2(), &MultiIndex::new(vec![0])).unwrap();
        assert_eq!(c.k, vec![0; 4]);
        assert_eq!(c.negatives, 0);
        let c = classify(&ChargeSystem::conifold(), &MultiIndex::new(vec![1])).unwrap();
        assert_eq!(c.k, vec![1, -1, -1, 1]);
        assert_eq!((c.negatives, c.jstar), (2, None));
        assert!(classify(&ChargeSystem::conifold(), &MultiIndex::new(vec![1, 1])).is_err());
    }

    #[test]
    fn conditions() {
        assert!(check_condition_a(&ChargeSystem::local_p2(), 10).holds);
        assert!(check_condition_a(&ChargeSystem::conifold(), 10).holds);
        let bad = validate_charges(vec![vec![1, -1, 0, 0], vec![-1, 1, 0, 0]]).unwrap();
        let r = check_condition_a(&bad, 2);
        assert!(!r.holds);
        assert_eq!(r.counterexample, Some(MultiIndex::new(vec![1, 1])));

        assert!(check_condition_b(&ChargeSystem::local_p2(), 10).holds);
        assert!(check_condition_b(&ChargeSystem::conifold(), 10).holds);
        let r = check_condition_b(&validate_charges(vec![vec![-4, 2, 2, 0]]).unwrap(), 3);
        assert!(!r.holds);
        assert_eq!(r.counterexample, Some(MultiIndex::new(vec![1])));
        assert!(check_condition_a(&local_p1xp1(), 8).holds);
        assert!(check_condition_b(&local_p1xp1(), 8).holds);
    }

    #[test]
    fn g1_and_mirror_map_examples() {
        let p2 = ChargeSystem::local_p2();
        let g = g1_series(&p2, 0, 2).unwrap();
        assert_eq!(g.univariate_coefficients(), vec![q(0, 1), q(6, 1), q(-45, 1)]);
        let qz = mirror_map(&p2, 0, 2).unwrap();
        assert_eq!(qz.univariate_coefficients(), vec![q(1, 1), q(6, 1), q(-27, 1)]);
        assert!(g1_series(&ChargeSystem::conifold(), 0, 7).unwrap().is_zero());
        assert_eq!(
            mirror_map(&ChargeSystem::conifold(), 0, 7).unwrap(),
            TruncatedSeries::one(1, 7)
        );
        assert!(g1_series(&p2, 0, 0).unwrap().is_zero());
        assert_eq!(mirror_map(&p2, 0, 0).unwrap(), TruncatedSeries::one(1, 0));
    }

    #[test]
    fn g1_refuses_without_condition_a() {
        let bad = validate_charges(vec![vec![1, -1, 0, 0], vec![-1, 1, 0, 0]]).unwrap();
        assert_eq!(
            g1_series(&bad, 0, 3),
            Err(Error::ConditionAUnverified {
                degree: 3,
                counterexample: vec![1, 1]
            })
        );
        assert!(matches!(
            mirror_map(&ChargeSystem::local_p2(), 1, 3),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn condition_b_is_not_necessary() {
        // [[-4,2,2,0]] violates (B), yet q/z = exp(-sum C(4m,2m) z^m/m) is the
        // even part of an integral series and stays integral.
        let cs = validate_charges(vec![vec![-4, 2, 2, 0]]).unwrap();
        assert!(check_condition_a(&cs, 8).holds);
        assert!(!check_condition_b(&cs, 8).holds);
        assert!(mirror_map(&cs, 0, 8).unwrap().is_integral().integral);
    }

    #[test]
    fn presets_have_integral_mirror_maps() {
        for cs in [ChargeSystem::local_p2(), ChargeSystem::conifold(), local_p1xp1()] {
            let degree = if cs.rows() == 1 { 12 } else { 8 };
            for qz in mirror_maps(&cs, degree).unwrap() {
                let cert = qz.is_integral();
                assert!(cert.integral, "{cs}: {:?}", cert.witness);
            }
        }
    }

    /// Sum over primitive `m` and multiples `a`, written with
    /// `sum_{j != jstar} k_j` in place of `-k_jstar`.
    fn g1_grouped(cs: &ChargeSystem, row: usize, degree: u32) -> TruncatedSeries {
        let mut terms = Vec::new();
        for m in MultiIndex::up_to_degree(cs.rows(), degree) {
            if m.is_zero() || gcd_all(m.as_slice().iter().map(|&x| x as i64)) != 1 {
                continue;
            }
            let c = classify(cs, &m).unwrap();
            let Some(j) = c.jstar else { continue };
            let rest: i64 = (0..c.k.len()).filter(|&i| i != j).map(|i| c.k[i]).sum();
            let mut a = 1u32;
            while m.degree() * a <= degree {
                let aa = a as i64;
                let num = fact(rest * aa - 1) * sign(c.k[j] * aa);
                let den: BigInt = (0..c.k.len())
                    .filter(|&i| i != j)
                    .map(|i| fact(c.k[i] * aa))
                    .product();
                let coeff = Rational::new(num * cs.row(row)[j], den);
                terms.push((m.scale(a).into_vec(), coeff));
                a += 1;
            }
        }
        TruncatedSeries::from_terms(cs.rows(), degree, terms).unwrap()
    }

    #[test]
    fn direct_enumeration_matches_grouped_form() {
        for cs in [ChargeSystem::local_p2(), ChargeSystem::conifold(), local_p1xp1()] {
            for row in 0..cs.rows() {
                assert_eq!(g1_series(&cs, row, 10).unwrap(), g1_grouped(&cs, row, 10), "{cs}");
            }
        }
    }

    fn charge_system() -> impl Strategy<Value = ChargeSystem> {
        (1usize..=2, 3usize..=5)
            .prop_flat_map(|(rows, width)| {
                prop::collection::vec(prop::collection::vec(-3i64..=3, width - 1), rows)
            })
            .prop_filter_map("zero row", |rows| {
                let vectors = rows
                    .into_iter()
                    .map(|mut r| {
                        let s: i64 = r.iter().sum();
                        r.push(-s);
                        r
                    })
                    .collect();
                ChargeSystem::new("random", vectors).ok()
            })
    }

    proptest! {
        #[test]
        fn homogeneity(cs in charge_system(), seed in prop::collection::vec(0u32..4, 2), a in 1u32..=5) {
            let m = MultiIndex::new(seed[..cs.rows()].to_vec());
            let c = classify(&cs, &m).unwrap();
            let ca = classify(&cs, &m.scale(a)).unwrap();
            let scaled: Vec<i64> = c.k.iter().map(|&k| k * a as i64).collect();
            prop_assert_eq!(&ca.k, &scaled);
            prop_assert_eq!(ca.negatives, c.negatives);
            prop_assert_eq!(ca.jstar, c.jstar);
        }

        #[test]
        fn single_negative_column_balances(cs in charge_system(), seed in prop::collection::vec(0u32..5, 2)) {
            let m = MultiIndex::new(seed[..cs.rows()].to_vec());
            let c = classify(&cs, &m).unwrap();
            if let Some(j) = c.jstar {
                prop_assert!(c.k[j] < 0);
                let rest: i64 = (0..c.k.len()).filter(|&i| i != j).map(|i| c.k[i]).sum();
                prop_assert_eq!(-c.k[j], rest);
            }
        }
    }
}
