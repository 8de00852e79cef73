//! Brane-extended charge systems: open-closed mirror maps, superpotentials
//! and the mirror-curve series.
//!
//! The extended matrix has rows `L^(0)..L^(N)` and two extra columns. For
//! inner branes the modified row is row 1, so an inner brane is the phase
//! `A = {1}`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{classify, fact, mirror_map, sign, ChargeSystem};
use crate::series::{MultiIndex, Rational, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BraneKind {
    Outer,
    Inner,
    /// Phase of the inner brane for a subset of base labels `1..=N`.
    Phase(Vec<usize>),
}

impl BraneKind {
    /// Base labels whose rows pick up `L^(0)`; empty for outer branes.
    fn modified(&self) -> Vec<usize> {
        match self {
            BraneKind::Outer => Vec::new(),
            BraneKind::Inner => vec![1],
            BraneKind::Phase(a) => a.clone(),
        }
    }
}

impl fmt::Display for BraneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BraneKind::Outer => write!(f, "outer"),
            BraneKind::Inner => write!(f, "inner"),
            BraneKind::Phase(a) => {
                let parts: Vec<String> = a.iter().map(usize::to_string).collect();
                write!(f, "phase:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for BraneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outer" => Ok(BraneKind::Outer),
            "inner" => Ok(BraneKind::Inner),
            _ => {
                let list = s
                    .strip_prefix("phase:")
                    .ok_or_else(|| Error::Parse(format!("unknown brane kind '{s}'")))?;
                let subset = list
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Parse(format!("phase subset '{t}': {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(BraneKind::Phase(subset))
            }
        }
    }
}

impl Serialize for BraneKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// `(-1)^(k_1 + m_0 - m_1)` in the inner superpotential.
    #[default]
    Printed,
    /// `(-1)^(k_0 + m_0 - m_1)`, matching the factorial's column.
    K0,
}

impl FromStr for SignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(SignConvention::Printed),
            "k0" => Ok(SignConvention::K0),
            _ => Err(Error::Parse(format!("unknown sign convention '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BraneSystem {
    pub base: ChargeSystem,
    pub extended: ChargeSystem,
    pub kind: BraneKind,
}

impl BraneSystem {
    /// Number of variables `z_0..z_N`.
    pub fn nvars(&self) -> usize {
        self.extended.rows()
    }

    fn is_outer(&self) -> bool {
        self.kind == BraneKind::Outer
    }

    /// Row indices `i >= 1` that were shifted by `L^(0)`.
    fn modified_rows(&self) -> Vec<usize> {
        self.kind.modified()
    }
}

/// `L^(0) = (1, -1, 0, ..., 0, -1, 1)` on `width + 2` columns.
fn brane_row(width: usize) -> Vec<i64> {
    let mut l0 = vec![0i64; width + 2];
    l0[0] = 1;
    l0[1] = -1;
    l0[width] = -1;
    l0[width + 1] = 1;
    l0
}

pub fn extend(cs: &ChargeSystem, kind: BraneKind) -> Result<BraneSystem> {
    let n = cs.rows();
    let kind = match kind {
        BraneKind::Phase(mut a) => {
            a.sort_unstable();
            a.dedup();
            if a.is_empty() || a.iter().any(|&i| i == 0 || i > n) {
                return Err(Error::InvalidSubset { n });
            }
            BraneKind::Phase(a)
        }
        k => k,
    };
    let width = cs.width();
    let l0 = brane_row(width);
    let padded = cs.vectors().iter().map(|r| {
        let mut r = r.clone();
        r.extend([0, 0]);
        r
    });
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(n + 1);
    if kind == BraneKind::Outer {
        rows.push(l0);
        rows.extend(padded);
    } else {
        let modified = kind.modified();
        rows.push(l0.iter().map(|x| -x).collect());
        for (label, r) in (1..).zip(padded) {
            if modified.contains(&label) {
                rows.push(r.iter().zip(&l0).map(|(a, b)| a + b).collect());
            } else {
                rows.push(r);
            }
        }
    }
    let name = format!("{}+{}", cs.name, kind);
    let extended = ChargeSystem::new(name, rows)?;
    Ok(BraneSystem {
        base: cs.clone(),
        extended,
        kind,
    })
}

/// Unit part `Q_i / z_i`, row `i` in `0..=N`.
pub fn open_closed_map(bs: &BraneSystem, i: usize, degree: u32) -> Result<TruncatedSeries> {
    mirror_map(&bs.extended, i, degree)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpotentialSeries {
    pub w: TruncatedSeries,
    pub kind: BraneKind,
}

impl SuperpotentialSeries {
    /// Outer: `m_0 > 0` on every monomial. Inner: `m_0 != sum_{i in A} m_i`.
    pub fn support_ok(&self) -> bool {
        let modified = self.kind.modified();
        self.w.terms().all(|(m, _)| {
            let m = m.as_slice();
            if modified.is_empty() {
                m[0] > 0
            } else {
                m[0] != modified.iter().map(|&i| m[i]).sum::<u32>()
            }
        })
    }
}

/// `W` or `W~` truncated at `degree`, summed exactly as stated: the product
/// over `k_j!` runs over the base columns only.
pub fn superpotential(
    bs: &BraneSystem,
    degree: u32,
    convention: SignConvention,
) -> Result<SuperpotentialSeries> {
    let nvars = bs.nvars();
    let base_width = bs.base.width();
    let outer = bs.is_outer();
    let modified = bs.modified_rows();
    let mut terms = Vec::new();
    for m in MultiIndex::up_to_degree(nvars, degree) {
        let c = classify(&bs.extended, &m)?;
        let k = &c.k[..base_width];
        let ms = m.as_slice();
        let m0 = ms[0] as i64;
        let coeff = if outer {
            if m0 == 0 || k[1] >= 0 || (0..base_width).any(|j| j != 1 && k[j] < 0) {
                continue;
            }
            let den: BigInt = (0..base_width)
                .filter(|&j| j != 1)
                .map(|j| fact(k[j]))
                .product::<BigInt>()
                * m0;
            Rational::new(sign(k[1] + m0) * fact(-k[1] - 1), den)
        } else {
            let shift = m0 - modified.iter().map(|&i| ms[i] as i64).sum::<i64>();
            if shift == 0 || k[0] >= 0 || k[1..].iter().any(|&kj| kj < 0) {
                continue;
            }
            let sign_column = match convention {
                SignConvention::Printed => k[1],
                SignConvention::K0 => k[0],
            };
            let den: BigInt = k[1..].iter().map(|&kj| fact(kj)).product::<BigInt>() * shift;
            Rational::new(sign(sign_column + shift) * fact(-k[0] - 1), den)
        };
        terms.push((m.into_vec(), coeff));
    }
    Ok(SuperpotentialSeries {
        w: TruncatedSeries::from_terms(nvars, degree, terms)?,
        kind: bs.kind.clone(),
    })
}

/// `theta_0 W` for outer branes, `(theta_0 - sum_{i in A} theta_i) W~` otherwise.
pub fn theta_superpotential(bs: &BraneSystem, sp: &SuperpotentialSeries) -> Result<TruncatedSeries> {
    let mut out = sp.w.theta(0)?;
    for &i in &bs.modified_rows() {
        out = out.checked_sub(&sp.w.theta(i)?)?;
    }
    Ok(out)
}

/// `exp(-theta_0 W)` (outer) or `exp(-(theta_0 - theta_1) W~)` (inner).
pub fn curve_series(
    bs: &BraneSystem,
    degree: u32,
    convention: SignConvention,
) -> Result<TruncatedSeries> {
    let sp = superpotential(bs, degree, convention)?;
    (-&theta_superpotential(bs, &sp)?).exp()
}
