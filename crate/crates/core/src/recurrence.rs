//! Recurrence vectors and the scalar / vector sequences they generate.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Which constructor invariants a recurrence vector was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// c₁ ≥ c₂ ≥ … ≥ c_k = 1. Every entry is at least 1.
    Strict,
    /// c₁ > 0, cᵢ ≥ 0, c_k = 1. Used by the probes.
    Relaxed,
}

/// The defining coefficients (c₁, …, c_k).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RecurrenceVector {
    coeffs: Vec<u64>,
    mode: Mode,
    weakly_decreasing: bool,
}

impl RecurrenceVector {
    pub fn strict(coeffs: Vec<u64>) -> Result<Self> {
        let rv = Self::relaxed(coeffs)?;
        if !rv.weakly_decreasing {
            return Err(Error::InvalidRecurrence(
                "strict mode requires c1 >= c2 >= ... >= ck".into(),
            ));
        }
        Ok(Self { mode: Mode::Strict, ..rv })
    }

    pub fn relaxed(coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidRecurrence("k >= 2 required".into()));
        }
        if coeffs[0] == 0 {
            return Err(Error::InvalidRecurrence("c1 > 0 required".into()));
        }
        if *coeffs.last().unwrap() != 1 {
            return Err(Error::InvalidRecurrence("ck = 1 required".into()));
        }
        let weakly_decreasing = coeffs.windows(2).all(|w| w[0] >= w[1]);
        Ok(Self {
            coeffs,
            mode: Mode::Relaxed,
            weakly_decreasing,
        })
    }

    pub fn new(coeffs: Vec<u64>, mode: Mode) -> Result<Self> {
        match mode {
            Mode::Strict => Self::strict(coeffs),
            Mode::Relaxed => Self::relaxed(coeffs),
        }
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    /// The dimension of the lattice, k − 1.
    pub fn dim(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// 1-based access: `c(1)` is c₁.
    pub fn c(&self, i: usize) -> u64 {
        self.coeffs[i - 1]
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn weakly_decreasing(&self) -> bool {
        self.weakly_decreasing
    }

    /// Σcᵢ, the amount a carry removes from the coefficient sum (plus one).
    pub fn sum(&self) -> u64 {
        self.coeffs.iter().sum()
    }

    /// Length of the longest run of consecutive zeros among the entries.
    pub fn longest_zero_run(&self) -> usize {
        let (mut best, mut run) = (0, 0);
        for &x in &self.coeffs {
            if x == 0 {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        best
    }
}

impl fmt::Display for RecurrenceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Parses a comma separated list of nonnegative integers, e.g. `2,1,1`.
pub fn parse_coeffs(s: &str) -> Result<Vec<u64>> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("{:?}: {e}", p.trim())))
        })
        .collect()
}

/// An element of Z^{k−1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(pub Vec<BigInt>);

impl LatticeVector {
    pub fn zero(dim: usize) -> Self {
        Self(vec![BigInt::zero(); dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[i - 1] = BigInt::from(1);
        v
    }

    pub fn from_i64(xs: &[i64]) -> Self {
        Self(xs.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn add_scaled(&mut self, other: &LatticeVector, factor: &BigInt) {
        for (x, y) in self.0.iter_mut().zip(&other.0) {
            *x += y * factor;
        }
    }

    pub fn sub(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&other.0).map(|(x, y)| x - y).collect())
    }

    pub fn add(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&other.0).map(|(x, y)| x + y).collect())
    }

    /// Sup norm.
    pub fn norm_inf(&self) -> BigInt {
        self.0.iter().map(|x| x.abs()).max().unwrap_or_default()
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(BigInt::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for LatticeVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
        if s.is_empty() {
            return Ok(LatticeVector(Vec::new()));
        }
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<BigInt>()
                    .map_err(|e| Error::Parse(format!("{:?}: {e}", p.trim())))
            })
            .collect::<Result<Vec<_>>>()
            .map(LatticeVector)
    }
}

/// Memoized two-sided scalar sequence X_n.
///
/// X₁ = 1, X_n = c₁X_{n−1} + … + c_{n−1}X₁ + 1 for n ≤ k, the full recurrence
/// afterwards. Nonpositive indices come from running the recurrence backwards,
/// which forces X₀ = 1.
#[derive(Debug, Clone)]
pub struct ScalarSequence {
    c: RecurrenceVector,
    // pos[i] = X_{i+1}
    pos: Vec<BigInt>,
    // neg[i] = X_{-i}
    neg: Vec<BigInt>,
}

impl ScalarSequence {
    pub fn new(c: &RecurrenceVector) -> Self {
        Self {
            c: c.clone(),
            pos: Vec::new(),
            neg: Vec::new(),
        }
    }

    pub fn recurrence(&self) -> &RecurrenceVector {
        &self.c
    }

    pub fn term(&mut self, n: i64) -> BigInt {
        if n >= 1 {
            self.extend_forward(n as usize);
            self.pos[n as usize - 1].clone()
        } else {
            let idx = n.unsigned_abs() as usize;
            self.extend_backward(idx);
            self.neg[idx].clone()
        }
    }

    /// X_1 ..= X_n as a slice (index i holds X_{i+1}).
    pub fn forward(&mut self, n: usize) -> &[BigInt] {
        self.extend_forward(n);
        &self.pos[..n]
    }

    fn extend_forward(&mut self, n: usize) {
        let k = self.c.k();
        while self.pos.len() < n {
            let m = self.pos.len() + 1;
            let mut x = BigInt::zero();
            for i in 1..=k.min(m - 1) {
                x += &self.pos[m - i - 1] * self.c.c(i);
            }
            if m <= k {
                x += 1;
            }
            self.pos.push(x);
        }
    }

    fn extend_backward(&mut self, idx: usize) {
        let k = self.c.k();
        self.extend_forward(k);
        while self.neg.len() <= idx {
            let n = -(self.neg.len() as i64);
            let mut x = self.get_cached(n + k as i64);
            for i in 1..k {
                x -= self.get_cached(n + (k - i) as i64) * self.c.c(i);
            }
            self.neg.push(x);
        }
    }

    fn get_cached(&self, n: i64) -> BigInt {
        if n >= 1 {
            self.pos[n as usize - 1].clone()
        } else {
            self.neg[n.unsigned_abs() as usize].clone()
        }
    }
}

/// Memoized two-sided vector sequence X⃗_n in Z^{k−1}.
#[derive(Debug, Clone)]
pub struct VectorSequence {
    c: RecurrenceVector,
    // pos[i] = X⃗_{i+1}
    pos: Vec<LatticeVector>,
    // neg[i] = X⃗_{-i}
    neg: Vec<LatticeVector>,
}

impl VectorSequence {
    pub fn new(c: &RecurrenceVector) -> Self {
        let d = c.dim();
        let mut neg = vec![LatticeVector::zero(d)];
        for i in 1..=d {
            neg.push(LatticeVector::unit(d, i));
        }
        Self {
            c: c.clone(),
            pos: Vec::new(),
            neg,
        }
    }

    pub fn recurrence(&self) -> &RecurrenceVector {
        &self.c
    }

    pub fn term(&mut self, n: i64) -> LatticeVector {
        self.get(n).clone()
    }

    pub fn get(&mut self, n: i64) -> &LatticeVector {
        if n >= 1 {
            self.extend_forward(n as usize);
            &self.pos[n as usize - 1]
        } else {
            let idx = n.unsigned_abs() as usize;
            self.extend_backward(idx);
            &self.neg[idx]
        }
    }

    /// X⃗₋₁ ..= X⃗₋ₙ (index i holds X⃗_{−(i+1)}).
    pub fn negatives(&mut self, n: usize) -> &[LatticeVector] {
        self.extend_backward(n);
        &self.neg[1..=n]
    }

    fn at(&self, n: i64) -> &LatticeVector {
        if n >= 1 {
            &self.pos[n as usize - 1]
        } else {
            &self.neg[n.unsigned_abs() as usize]
        }
    }

    fn extend_forward(&mut self, n: usize) {
        let k = self.c.k();
        while self.pos.len() < n {
            let m = (self.pos.len() + 1) as i64;
            let mut x = LatticeVector::zero(self.c.dim());
            for i in 1..=k {
                x.add_scaled(self.at(m - i as i64), &BigInt::from(self.c.c(i)));
            }
            self.pos.push(x);
        }
    }

    fn extend_backward(&mut self, idx: usize) {
        let k = self.c.k();
        while self.neg.len() <= idx {
            let n = -(self.neg.len() as i64);
            let mut x = self.at(n + k as i64).clone();
            for i in 1..k {
                x.add_scaled(self.at(n + (k - i) as i64), &-BigInt::from(self.c.c(i)));
            }
            self.neg.push(x);
        }
    }
}

pub fn scalar_term(c: &RecurrenceVector, n: i64) -> BigInt {
    ScalarSequence::new(c).term(n)
}

pub fn vector_term(c: &RecurrenceVector, n: i64) -> LatticeVector {
    VectorSequence::new(c).term(n)
}
