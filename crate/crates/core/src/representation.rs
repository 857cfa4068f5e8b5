//! Coefficient strings over (X⃗₋ₙ), the satisfying-representation grammar and
//! the coefficient-sum functionals.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::recurrence::{LatticeVector, RecurrenceVector, VectorSequence};

/// Nonnegative coefficients a₁…a_m, stored without trailing zeros.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoefficientString(Vec<u64>);

impl CoefficientString {
    pub fn new(mut coeffs: Vec<u64>) -> Self {
        trim(&mut coeffs);
        Self(coeffs)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }

    /// Index of the last nonzero coefficient (0 for the empty string).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based access; positions past the end read as 0.
    pub fn get(&self, i: usize) -> u64 {
        if i == 0 {
            return 0;
        }
        self.0.get(i - 1).copied().unwrap_or(0)
    }
}

pub(crate) fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

impl fmt::Display for CoefficientString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for CoefficientString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        crate::recurrence::parse_coeffs(s).map(Self::new)
    }
}

impl From<Vec<u64>> for CoefficientString {
    fn from(v: Vec<u64>) -> Self {
        Self::new(v)
    }
}

/// Where the left-to-right scan of a string first breaks the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overfill {
    /// 1-based start n_p of the chunk being read.
    pub chunk_start: usize,
    /// Number of leading entries of the chunk that equal c₁, …, c_j.
    pub matched: usize,
    /// 1-based position I(a) = n_p + j of the offending coefficient.
    pub pos: usize,
}

/// Scans `a` (1-based as a slice from a₁) and reports the first grammar
/// violation, or `None` when `a` is a satisfying representation.
pub fn first_overfill(c: &[u64], a: &[u64]) -> Option<Overfill> {
    let k = c.len();
    let m = a.len();
    let mut p = 0;
    while p < m {
        if a[p] == 0 {
            p += 1;
            continue;
        }
        let start = p;
        let mut s = 0;
        loop {
            if s == k {
                return Some(Overfill {
                    chunk_start: start + 1,
                    matched: k - 1,
                    pos: start + k,
                });
            }
            let d = a.get(start + s).copied().unwrap_or(0);
            if d == c[s] {
                s += 1;
            } else if d < c[s] {
                p = start + s + 1;
                break;
            } else {
                return Some(Overfill {
                    chunk_start: start + 1,
                    matched: s,
                    pos: start + s + 1,
                });
            }
        }
    }
    None
}

/// One chunk: `start` is 1-based, `matched` entries equal c₁…c_matched, the
/// next entry is below c_{matched+1}, the remainder are zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkSpan {
    pub start: usize,
    pub len: usize,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkDecomposition {
    pub spans: Vec<ChunkSpan>,
}

impl ChunkDecomposition {
    /// CH(a).
    pub fn count(&self) -> usize {
        self.spans.len()
    }
}

fn chunk_spans(c: &[u64], a: &[u64]) -> Option<Vec<ChunkSpan>> {
    let k = c.len();
    let m = a.len();
    let mut starts = Vec::new();
    let mut p = 0;
    while p < m {
        if a[p] == 0 {
            p += 1;
            continue;
        }
        let start = p;
        let mut s = 0;
        loop {
            if s == k {
                return None;
            }
            let d = a.get(start + s).copied().unwrap_or(0);
            if d == c[s] {
                s += 1;
            } else if d < c[s] {
                starts.push((start + 1, s));
                p = start + s + 1;
                break;
            } else {
                return None;
            }
        }
    }
    let mut spans = Vec::with_capacity(starts.len());
    for (i, &(start, matched)) in starts.iter().enumerate() {
        let end = starts.get(i + 1).map(|&(s, _)| s).unwrap_or(m + 1);
        spans.push(ChunkSpan {
            start,
            len: end - start,
            matched,
        });
    }
    Some(spans)
}

pub fn is_sr(c: &RecurrenceVector, a: &CoefficientString) -> bool {
    first_overfill(c.coeffs(), a.as_slice()).is_none()
}

pub fn chunks(c: &RecurrenceVector, a: &CoefficientString) -> Result<ChunkDecomposition> {
    chunk_spans(c.coeffs(), a.as_slice())
        .map(|spans| ChunkDecomposition { spans })
        .ok_or(Error::NotSatisfying)
}

/// End complete: the last k entries are a full copy of c and lowering the
/// final entry by one leaves a satisfying representation whose last chunk
/// starts at m − k + 1.
pub fn slice_end_complete(c: &[u64], a: &[u64]) -> bool {
    let k = c.len();
    let mut m = a.len();
    while m > 0 && a[m - 1] == 0 {
        m -= 1;
    }
    if m < k || a[m - k..m] != *c {
        return false;
    }
    let mut b = a[..m].to_vec();
    b[m - 1] -= 1;
    match chunk_spans(c, &b) {
        Some(spans) => spans.last().map(|s| s.start) == Some(m - k + 1),
        None => false,
    }
}

pub fn is_end_complete(c: &RecurrenceVector, a: &CoefficientString) -> bool {
    slice_end_complete(c.coeffs(), a.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrKind {
    Sr,
    /// Smallest index whose decrement yields a satisfying representation.
    Nsr { witness: usize },
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SrClassification {
    pub kind: SrKind,
    /// I(a); `None` for satisfying representations.
    pub first_overfilled: Option<usize>,
    pub end_complete: bool,
}

pub fn classify(c: &RecurrenceVector, a: &CoefficientString) -> SrClassification {
    let cs = c.coeffs();
    let Some(over) = first_overfill(cs, a.as_slice()) else {
        return SrClassification {
            kind: SrKind::Sr,
            first_overfilled: None,
            end_complete: false,
        };
    };
    let mut b = a.as_slice().to_vec();
    let mut kind = SrKind::Other;
    for i in 0..b.len() {
        if b[i] == 0 {
            continue;
        }
        b[i] -= 1;
        let ok = first_overfill(cs, &b).is_none();
        b[i] += 1;
        if ok {
            kind = SrKind::Nsr { witness: i + 1 };
            break;
        }
    }
    SrClassification {
        kind,
        first_overfilled: Some(over.pos),
        end_complete: matches!(kind, SrKind::Nsr { .. }) && slice_end_complete(cs, a.as_slice()),
    }
}

/// G(a) = Σ aᵢ.
pub fn coefficient_sum(a: &CoefficientString) -> u64 {
    a.as_slice().iter().sum()
}

/// G_n(a) = Σ_{i<n} aᵢ.
pub fn prefix_sum(a: &CoefficientString, n: usize) -> u64 {
    let end = n.saturating_sub(1).min(a.len());
    a.as_slice()[..end].iter().sum()
}

/// Σ aₙ X⃗₋ₙ.
pub fn evaluate(c: &RecurrenceVector, a: &CoefficientString) -> LatticeVector {
    evaluate_with(&mut VectorSequence::new(c), a.as_slice())
}

pub fn evaluate_with(seq: &mut VectorSequence, a: &[u64]) -> LatticeVector {
    let dim = seq.recurrence().dim();
    let basis = seq.negatives(a.len());
    let mut v = LatticeVector::zero(dim);
    for (x, &ai) in basis.iter().zip(a) {
        if ai != 0 {
            v.add_scaled(x, &BigInt::from(ai));
        }
    }
    v
}
