//! The scalar map S_n, scalar legal decompositions, and the regions D_n, R_n.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::recurrence::{LatticeVector, RecurrenceVector, ScalarSequence, VectorSequence};
use crate::representation::CoefficientString;

pub const DEFAULT_CAP: u64 = 10_000_000;

/// v·(X_{n−1}, …, X_{n−k+1}) without reduction.
pub fn s_n_unreduced(seq: &mut ScalarSequence, n: i64, v: &LatticeVector) -> Result<BigInt> {
    let c = seq.recurrence();
    let k = c.k() as i64;
    if n < k - 2 {
        return Err(Error::DomainError { n, min: k - 2 });
    }
    if v.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: v.dim(),
        });
    }
    let mut acc = BigInt::zero();
    for (j, x) in v.0.iter().enumerate() {
        acc += x * seq.term(n - 1 - j as i64);
    }
    Ok(acc)
}

/// S_n(v) = v·(X_{n−1}, …, X_{n−k+1}) mod X_n, in [0, X_n).
pub fn s_n_map(c: &RecurrenceVector, n: i64, v: &LatticeVector) -> Result<BigInt> {
    let mut seq = ScalarSequence::new(c);
    s_n_map_with(&mut seq, n, v)
}

pub fn s_n_map_with(seq: &mut ScalarSequence, n: i64, v: &LatticeVector) -> Result<BigInt> {
    let dot = s_n_unreduced(seq, n, v)?;
    Ok(dot.mod_floor(&seq.term(n)))
}

/// N = Σ digits[i]·X_{top−i}; digits are read against descending indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarDecomposition {
    pub top: usize,
    pub digits: Vec<u64>,
}

impl ScalarDecomposition {
    pub fn summands(&self) -> u64 {
        self.digits.iter().sum()
    }

    /// (index, multiplicity) pairs, largest index first.
    pub fn terms(&self) -> Vec<(usize, u64)> {
        self.digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(i, &d)| (self.top - i, d))
            .collect()
    }
}

/// Greedy legal decomposition of N over (X_n). Each digit takes as much as
/// the remainder allows, capped so the digit string stays inside the chunk
/// grammar (a chunk may copy c₁…c_{k−1} but must end below c_k).
pub fn legal_decompose_scalar(c: &RecurrenceVector, n: &BigInt) -> ScalarDecomposition {
    let mut seq = ScalarSequence::new(c);
    legal_decompose_scalar_with(&mut seq, n)
}

pub fn legal_decompose_scalar_with(seq: &mut ScalarSequence, n: &BigInt) -> ScalarDecomposition {
    if n <= &BigInt::zero() {
        return ScalarDecomposition {
            top: 0,
            digits: Vec::new(),
        };
    }
    let mut top = 1;
    while &seq.term(top as i64 + 1) <= n {
        top += 1;
    }
    let c = seq.recurrence().clone();
    let k = c.k();
    let mut rem = n.clone();
    let mut s = 1;
    let mut digits = Vec::with_capacity(top);
    for idx in (1..=top).rev() {
        let x = seq.term(idx as i64);
        let cap = if s < k { c.c(s) } else { c.c(k) - 1 };
        let fit = (&rem / &x).to_u64().unwrap_or(u64::MAX);
        let d = fit.min(cap);
        rem -= &x * d;
        digits.push(d);
        if s < k && d == c.c(s) {
            s += 1;
        } else {
            s = 1;
        }
    }
    debug_assert!(rem.is_zero());
    ScalarDecomposition { top, digits }
}

fn check_cap(seq: &mut ScalarSequence, n: usize, cap: u64) -> Result<()> {
    let size = seq.term(n as i64 + 1);
    if size > BigInt::from(cap) {
        return Err(Error::CapExceeded {
            size: size.to_string(),
            cap,
        });
    }
    Ok(())
}

/// Visits every satisfying representation with support in [1, n], in
/// lexicographic order of (a₁, …, a_n), together with its value.
pub fn for_each_sr<F>(c: &RecurrenceVector, n: usize, cap: u64, mut f: F) -> Result<()>
where
    F: FnMut(&[u64], &LatticeVector),
{
    check_cap(&mut ScalarSequence::new(c), n, cap)?;
    let basis = VectorSequence::new(c).negatives(n).to_vec();
    let mut digits = vec![0u64; n];
    let zero = LatticeVector::zero(c.dim());
    walk(c.coeffs(), &basis, 0, 0, &mut digits, &zero, &mut f);
    Ok(())
}

fn walk<F>(
    c: &[u64],
    basis: &[LatticeVector],
    pos: usize,
    matched: usize,
    digits: &mut Vec<u64>,
    value: &LatticeVector,
    f: &mut F,
) where
    F: FnMut(&[u64], &LatticeVector),
{
    if pos == digits.len() {
        let m = digits.iter().rposition(|&d| d != 0).map_or(0, |i| i + 1);
        f(&digits[..m], value);
        return;
    }
    let k = c.len();
    let target = c[matched];
    for d in 0..=target {
        let next = if d == target {
            if matched + 1 == k {
                continue;
            }
            matched + 1
        } else {
            0
        };
        digits[pos] = d;
        if d == 0 {
            walk(c, basis, pos + 1, next, digits, value, f);
        } else {
            let mut v = value.clone();
            v.add_scaled(&basis[pos], &BigInt::from(d));
            walk(c, basis, pos + 1, next, digits, &v, f);
        }
    }
    digits[pos] = 0;
}

/// All satisfying representations with support in [1, n]; there are X_{n+1}.
pub fn enumerate_sr(c: &RecurrenceVector, n: usize, cap: u64) -> Result<Vec<CoefficientString>> {
    let mut out = Vec::new();
    for_each_sr(c, n, cap, |a, _| out.push(CoefficientString::new(a.to_vec())))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMember {
    pub point: LatticeVector,
    pub sr: CoefficientString,
}

impl RegionMember {
    /// Smallest i with the point in D_i.
    pub fn n_first(&self) -> usize {
        self.sr.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSet {
    pub n: usize,
    pub members: Vec<RegionMember>,
}

impl RegionSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn points(&self) -> HashSet<LatticeVector> {
        self.members.iter().map(|m| m.point.clone()).collect()
    }
}

/// D_n: values of all satisfying representations with support in [1, n].
pub fn region_d(c: &RecurrenceVector, n: usize, cap: u64) -> Result<RegionSet> {
    let mut members = Vec::new();
    for_each_sr(c, n, cap, |a, v| {
        members.push(RegionMember {
            point: v.clone(),
            sr: CoefficientString::new(a.to_vec()),
        })
    })?;
    Ok(RegionSet { n, members })
}

/// R_n: the points of D_n whose representation needs index n.
pub fn region_r(c: &RecurrenceVector, n: usize, cap: u64) -> Result<RegionSet> {
    let mut d = region_d(c, n, cap)?;
    if n > 0 {
        d.members.retain(|m| m.n_first() == n);
    }
    Ok(d)
}

/// Points of D_n that S_{n+1} sends into [X_n, X_{n+1}); the representations
/// here are exactly those with a₁ ≥ 1.
pub fn bridge_layer(c: &RecurrenceVector, n: usize, cap: u64) -> Result<RegionSet> {
    let mut seq = ScalarSequence::new(c);
    let lo = seq.term(n as i64);
    let hi = seq.term(n as i64 + 1);
    let mut d = region_d(c, n, cap)?;
    let mut keep = Vec::with_capacity(d.members.len());
    for m in d.members {
        let s = s_n_map_with(&mut seq, n as i64 + 1, &m.point)?;
        if s >= lo && s < hi {
            keep.push(m);
        }
    }
    d.members = keep;
    Ok(d)
}

/// Smallest n with every point of the sup-norm ball of radius r inside D_n,
/// found by growing D_n one layer at a time.
pub fn ball_coverage(c: &RecurrenceVector, r: u64, cap: u64) -> Result<usize> {
    let dim = c.dim();
    let side = r
        .checked_mul(2)
        .and_then(|s| s.checked_add(1))
        .and_then(|s| usize::try_from(s).ok())
        .ok_or(Error::Overflow)?;
    let total = side.checked_pow(dim as u32).ok_or(Error::Overflow)?;
    let r = BigInt::from(r);
    let mut found: HashSet<LatticeVector> = HashSet::new();
    found.insert(LatticeVector::zero(dim));
    let mut n = 0;
    while found.len() < total {
        n += 1;
        for_each_sr(c, n, cap, |a, v| {
            if a.len() == n && v.norm_inf() <= r {
                found.insert(v.clone());
            }
        })?;
    }
    Ok(n)
}
