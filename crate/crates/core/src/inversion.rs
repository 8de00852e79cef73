//! Compositional inverses of unit-form maps `Z_i = z_i exp(f_i(z))`.
//!
//! [`invert_lagrange_good`] extracts coefficients from
//! `exp(-sum m_j f_j) det(delta + theta f)`; [`invert_iterative`] solves
//! `z_i = Z_i exp(-f_i(z))` by fixed-point substitution and exists to check
//! the first one.

use std::collections::HashMap;

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{
    bareiss_determinant, cofactor_determinant, det_theta_jacobian, theta_matrix, MultiIndex,
    Rational, TruncatedSeries,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitMapFamily {
    fs: Vec<TruncatedSeries>,
}

impl UnitMapFamily {
    /// `fs[i]` is the exponent of `Z_i / z_i`. All series need `fs.len()`
    /// variables, a common bound and zero constant term.
    pub fn new(fs: Vec<TruncatedSeries>) -> Result<Self> {
        let n = fs.len();
        let Some(first) = fs.first() else {
            return Err(Error::ShapeMismatch("empty family".into()));
        };
        let bound = first.bound();
        for f in &fs {
            if f.nvars() != n {
                return Err(Error::MismatchedVars {
                    left: n,
                    right: f.nvars(),
                });
            }
            if f.bound() != bound {
                return Err(Error::ShapeMismatch(format!(
                    "bounds differ ({bound} vs {})",
                    f.bound()
                )));
            }
            if !f.constant_term().is_zero() {
                return Err(Error::NonzeroConstantTerm);
            }
        }
        Ok(UnitMapFamily { fs })
    }

    /// Family from unit parts `u_i = Z_i / z_i` (constant term 1).
    pub fn from_units(units: &[TruncatedSeries]) -> Result<Self> {
        Self::new(units.iter().map(TruncatedSeries::log).collect::<Result<_>>()?)
    }

    pub fn nvars(&self) -> usize {
        self.fs.len()
    }

    pub fn bound(&self) -> u32 {
        self.fs[0].bound()
    }

    pub fn exponents(&self) -> &[TruncatedSeries] {
        &self.fs
    }

    /// `Z_i = z_i exp(f_i)` as a series.
    pub fn forward(&self) -> Result<Vec<TruncatedSeries>> {
        self.fs
            .iter()
            .enumerate()
            .map(|(i, f)| f.exp()?.multiply_by_variable(i))
            .collect()
    }

    fn check_degree(&self, degree: u32) -> Result<()> {
        if degree > self.bound() {
            Err(Error::DegreeExceedsBound {
                degree,
                bound: self.bound(),
            })
        } else {
            Ok(())
        }
    }

    fn z0_free(&self) -> bool {
        self.nvars() >= 2 && self.fs.iter().all(|f| f.is_independent_of(0))
    }
}

/// `prod_j bases_j^{m_j}` for every `m` of degree `<= max_degree`, each
/// truncated at `bound`. Built shell by shell from the previous shell.
fn monomial_products(
    bases: &[TruncatedSeries],
    nvars: usize,
    max_degree: u32,
    bound: u32,
) -> HashMap<MultiIndex, TruncatedSeries> {
    let mut memo: HashMap<MultiIndex, TruncatedSeries> = HashMap::new();
    memo.insert(MultiIndex::zero(bases.len()), TruncatedSeries::one(nvars, bound));
    for d in 1..=max_degree {
        let shell: Vec<(MultiIndex, TruncatedSeries)> = MultiIndex::of_degree(bases.len(), d)
            .into_par_iter()
            .map(|m| {
                let k = m.as_slice().iter().position(|&e| e > 0).expect("nonzero");
                let prev = m.checked_sub(&MultiIndex::unit(bases.len(), k)).expect("m_k > 0");
                let p = &memo[&prev] * &bases[k].truncate(bound);
                (m, p)
            })
            .collect();
        memo.extend(shell);
    }
    memo
}

/// Coefficient of `z^target` in `a * b` without forming the product.
fn product_coefficient(a: &TruncatedSeries, b: &TruncatedSeries, target: &MultiIndex) -> Rational {
    let mut acc = Rational::zero();
    for (k, cb) in b.terms() {
        if k.degree() > target.degree() {
            break;
        }
        if let Some(rest) = target.checked_sub(k) {
            let ca = a.coefficient(rest.as_slice());
            if !ca.is_zero() {
                acc += ca * cb;
            }
        }
    }
    acc
}

fn lagrange_good(
    fam: &UnitMapFamily,
    degree: u32,
    det: &TruncatedSeries,
    keep: impl Fn(&MultiIndex, usize) -> bool + Sync,
) -> Result<Vec<TruncatedSeries>> {
    let n = fam.nvars();
    let work = degree.saturating_sub(1);
    let exps: Vec<TruncatedSeries> = fam
        .fs
        .iter()
        .map(|f| (-&f.truncate(work)).exp())
        .collect::<Result<_>>()?;
    let det = det.truncate(work);
    let products = monomial_products(&exps, n, degree, work);
    let indices: Vec<MultiIndex> = MultiIndex::up_to_degree(n, degree)
        .into_iter()
        .filter(|m| !m.is_zero())
        .collect();
    (0..n)
        .map(|i| {
            let e_i = MultiIndex::unit(n, i);
            let terms: Vec<(Vec<u32>, Rational)> = indices
                .par_iter()
                .filter(|m| keep(m, i))
                .filter_map(|m| {
                    let target = m.checked_sub(&e_i)?;
                    let c = product_coefficient(&products[m], &det, &target);
                    Some((m.as_slice().to_vec(), c))
                })
                .collect();
            TruncatedSeries::from_terms(n, degree, terms)
        })
        .collect()
}

/// `z_i(Z)` for each `i`, by Lagrange-Good coefficient extraction. When no
/// `f_j` depends on `z_0`, only indices with `m_0 = delta_{i0}` can be nonzero
/// and the determinant reduces to its minor on `z_1..z_n`; that path is used
/// automatically.
pub fn invert_lagrange_good(fam: &UnitMapFamily, degree: u32) -> Result<Vec<TruncatedSeries>> {
    fam.check_degree(degree)?;
    if fam.z0_free() {
        invert_fast(fam, degree)
    } else {
        invert_general(fam, degree)
    }
}

/// The general determinant path, regardless of variable dependence.
pub fn invert_general(fam: &UnitMapFamily, degree: u32) -> Result<Vec<TruncatedSeries>> {
    fam.check_degree(degree)?;
    let det = det_theta_jacobian(&fam.fs)?;
    lagrange_good(fam, degree, &det, |_, _| true)
}

fn invert_fast(fam: &UnitMapFamily, degree: u32) -> Result<Vec<TruncatedSeries>> {
    let n = fam.nvars();
    let rest: Vec<usize> = (1..n).collect();
    let minor = theta_matrix(&fam.fs, &rest)?;
    let det = if minor.len() <= 4 {
        cofactor_determinant(&minor, n, fam.bound())
    } else {
        bareiss_determinant(minor)?
    };
    lagrange_good(fam, degree, &det, |m, i| m.as_slice()[0] == u32::from(i == 0))
}

/// `f(subs_0, ..., subs_{n-1})` truncated at `degree`. Every substituted
/// series needs zero constant term.
pub fn compose(f: &TruncatedSeries, subs: &[TruncatedSeries], degree: u32) -> Result<TruncatedSeries> {
    if subs.len() != f.nvars() {
        return Err(Error::LengthMismatch {
            expected: f.nvars(),
            got: subs.len(),
        });
    }
    let Some(first) = subs.first() else {
        return Err(Error::ShapeMismatch("nothing to substitute".into()));
    };
    let nvars = first.nvars();
    for s in subs {
        if s.nvars() != nvars {
            return Err(Error::MismatchedVars {
                left: nvars,
                right: s.nvars(),
            });
        }
        if !s.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        if s.bound() < degree {
            return Err(Error::DegreeExceedsBound {
                degree,
                bound: s.bound(),
            });
        }
    }
    let top = degree.min(f.bound());
    let powers = monomial_products(subs, nvars, top, degree);
    let mut out = TruncatedSeries::zero(nvars, degree);
    for (m, c) in f.terms() {
        if m.degree() > top {
            break;
        }
        out = out.checked_add(&powers[m].scale(c))?;
    }
    Ok(out)
}

/// Fixed-point oracle: start from `z = Z` and repeat
/// `z_i <- Z_i exp(-f_i(z))`; each pass fixes one more degree.
pub fn invert_iterative(fam: &UnitMapFamily, degree: u32) -> Result<Vec<TruncatedSeries>> {
    fam.check_degree(degree)?;
    let n = fam.nvars();
    let vars: Vec<TruncatedSeries> = (0..n)
        .map(|i| TruncatedSeries::variable(n, degree, i))
        .collect::<Result<_>>()?;
    let mut z = vars.clone();
    for _ in 1..degree {
        z = fam
            .fs
            .iter()
            .zip(&vars)
            .map(|(f, zi)| {
                let e = (-&compose(f, &z, degree)?).exp()?;
                zi.checked_mul(&e)
            })
            .collect::<Result<_>>()?;
    }
    Ok(z)
}

/// `z_i(Z) / Z_i` for every `i`, i.e. the unit parts of the inverse.
pub fn inverse_units(inverse: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>> {
    inverse
        .iter()
        .enumerate()
        .map(|(i, z)| z.divide_by_variable(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn uni(coeffs: &[Rational], bound: u32) -> TruncatedSeries {
        TruncatedSeries::from_terms(
            1,
            bound,
            coeffs.iter().enumerate().map(|(k, c)| (vec![k as u32], c.clone())),
        )
        .unwrap()
    }

    #[test]
    fn geometric_map() {
        // Z = z/(1-z), inverse Z/(1+Z)
        let f = uni(&(0..=6).map(|k| if k == 0 { q(0, 1) } else { q(1, k) }).collect::<Vec<_>>(), 6);
        let fam = UnitMapFamily::new(vec![f]).unwrap();
        let expected: Vec<Rational> = (0..=6)
            .map(|k| match k {
                0 => q(0, 1),
                k if k % 2 == 1 => q(1, 1),
                _ => q(-1, 1),
            })
            .collect();
        for inv in [invert_lagrange_good(&fam, 6).unwrap(), invert_iterative(&fam, 6).unwrap()] {
            assert_eq!(inv[0].univariate_coefficients(), expected);
        }
    }

    #[test]
    fn tree_function() {
        // Z = z exp(-z), z = sum n^(n-1) Z^n / n!
        let f = uni(&[q(0, 1), q(-1, 1)], 5);
        let fam = UnitMapFamily::new(vec![f]).unwrap();
        let lg = invert_lagrange_good(&fam, 5).unwrap();
        let expected = vec![q(0, 1), q(1, 1), q(1, 1), q(3, 2), q(8, 3), q(125, 24)];
        assert_eq!(lg[0].univariate_coefficients(), expected);
        assert_eq!(invert_iterative(&fam, 5).unwrap(), lg);
    }

    #[test]
    fn zero_exponents_give_identity() {
        let fam = UnitMapFamily::new(vec![TruncatedSeries::zero(2, 4); 2]).unwrap();
        let ident: Vec<TruncatedSeries> =
            (0..2).map(|i| TruncatedSeries::variable(2, 4, i).unwrap()).collect();
        assert_eq!(invert_lagrange_good(&fam, 4).unwrap(), ident);
        assert_eq!(invert_general(&fam, 4).unwrap(), ident);
        assert_eq!(invert_iterative(&fam, 4).unwrap(), ident);
    }

    #[test]
    fn family_validation() {
        assert!(matches!(UnitMapFamily::new(vec![]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            UnitMapFamily::new(vec![TruncatedSeries::zero(2, 3)]),
            Err(Error::MismatchedVars { .. })
        ));
        assert_eq!(
            UnitMapFamily::new(vec![TruncatedSeries::one(1, 3)]),
            Err(Error::NonzeroConstantTerm)
        );
        let fam = UnitMapFamily::new(vec![TruncatedSeries::zero(1, 3)]).unwrap();
        assert_eq!(
            invert_lagrange_good(&fam, 4),
            Err(Error::DegreeExceedsBound { degree: 4, bound: 3 })
        );
    }

    fn random_family(rng: &mut ChaCha8Rng, n: usize, degree: u32) -> UnitMapFamily {
        let mut fs = Vec::with_capacity(n);
        for _ in 0..n {
            let mut terms = Vec::new();
            for m in MultiIndex::up_to_degree(n, degree) {
                if !m.is_zero() && rng.gen_bool(0.4) {
                    terms.push((m.into_vec(), q(rng.gen_range(-3..=3), rng.gen_range(1..=3))));
                }
            }
            fs.push(TruncatedSeries::from_terms(n, degree, terms).unwrap());
        }
        UnitMapFamily::new(fs).unwrap()
    }

    #[test]
    fn lagrange_good_matches_iteration_on_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..6 {
            let n = 1 + trial % 3;
            let fam = random_family(&mut rng, n, 5);
            assert_eq!(
                invert_lagrange_good(&fam, 5).unwrap(),
                invert_iterative(&fam, 5).unwrap(),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn round_trip_both_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fam = random_family(&mut rng, 2, 5);
        let inv = invert_lagrange_good(&fam, 5).unwrap();
        let fwd = fam.forward().unwrap();
        let n = fam.nvars();
        for i in 0..n {
            let zi = TruncatedSeries::variable(n, 5, i).unwrap();
            assert_eq!(compose(&fwd[i], &inv, 5).unwrap(), zi);
            assert_eq!(compose(&inv[i], &fwd, 5).unwrap(), zi);
        }
    }

    #[test]
    fn fast_path_matches_general_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let base = random_family(&mut rng, 3, 5);
            let fs: Vec<TruncatedSeries> = base
                .exponents()
                .iter()
                .map(|f| {
                    TruncatedSeries::from_terms(
                        3,
                        5,
                        f.terms()
                            .filter(|(m, _)| m.as_slice()[0] == 0)
                            .map(|(m, c)| (m.as_slice().to_vec(), c.clone())),
                    )
                    .unwrap()
                })
                .collect();
            let fam = UnitMapFamily::new(fs).unwrap();
            assert!(fam.z0_free());
            assert_eq!(invert_fast(&fam, 5).unwrap(), invert_general(&fam, 5).unwrap());
        }
    }

    #[test]
    fn local_p2_inverse_is_integral() {
        use crate::geometry::{mirror_exponents, ChargeSystem};
        let fam = UnitMapFamily::new(mirror_exponents(&ChargeSystem::local_p2(), 8).unwrap()).unwrap();
        let inv = invert_lagrange_good(&fam, 8).unwrap();
        assert_eq!(inv, invert_iterative(&fam, 8).unwrap());
        for u in inverse_units(&inv).unwrap() {
            assert!(u.is_integral().integral);
        }
        // z = q - 6q^2 + 99q^3 + ...
        assert_eq!(inv[0].coefficient(&[2]), q(-6, 1));
        assert_eq!(inv[0].coefficient(&[3]), q(99, 1));
    }

    #[test]
    fn compose_checks_arguments() {
        let f = TruncatedSeries::variable(2, 3, 0).unwrap();
        let z = TruncatedSeries::variable(1, 3, 0).unwrap();
        assert!(matches!(compose(&f, &[z.clone()], 3), Err(Error::LengthMismatch { .. })));
        let one = TruncatedSeries::one(1, 3);
        assert_eq!(compose(&f, &[z, one], 3), Err(Error::NonzeroConstantTerm));
    }
}
