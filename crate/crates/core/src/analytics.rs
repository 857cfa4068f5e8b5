//! Summand-count statistics over [X_n, X_{n+1}) and summand minimality.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint, Sign};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bridge::legal_decompose_scalar_with;
use crate::error::{Error, Result};
use crate::normalize::decompose;
use crate::recurrence::{LatticeVector, RecurrenceVector, ScalarSequence, VectorSequence};
use crate::representation::coefficient_sum;

/// 1/(φ² + 1), the limiting summand density for Fibonacci.
pub fn lekkerkerker_slope() -> f64 {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    1.0 / (phi * phi + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SampleMode {
    Exact,
    Sampled { size: u64, seed: u64 },
}

/// Distribution of the number of summands K_n. Moments use population
/// (biased) estimators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummandStats {
    pub c: Vec<u64>,
    pub n: usize,
    pub mode: SampleMode,
    pub total: u64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub histogram: BTreeMap<u64, u64>,
}

impl SummandStats {
    fn from_histogram(c: &RecurrenceVector, n: usize, mode: SampleMode, histogram: BTreeMap<u64, u64>) -> Self {
        let total: u64 = histogram.values().sum();
        let t = total as f64;
        let mean = histogram.iter().map(|(&k, &f)| k as f64 * f as f64).sum::<f64>() / t;
        let moment = |p: i32| {
            histogram
                .iter()
                .map(|(&k, &f)| (k as f64 - mean).powi(p) * f as f64)
                .sum::<f64>()
                / t
        };
        let variance = moment(2);
        let (skewness, excess_kurtosis) = if variance > 0.0 {
            (moment(3) / variance.powf(1.5), moment(4) / (variance * variance) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Self {
            c: c.coeffs().to_vec(),
            n,
            mode,
            total,
            mean,
            variance,
            skewness,
            excess_kurtosis,
            histogram,
        }
    }
}

/// Uniform integer in [0, width) by rejection on the bit length of `width`.
/// Limbs are drawn least significant first.
pub fn uniform_below(rng: &mut ChaCha8Rng, width: &BigUint) -> BigUint {
    let bits = width.bits();
    let words = bits.div_ceil(64) as usize;
    let top_bits = bits - 64 * (words as u64 - 1);
    let mask = if top_bits == 64 { u64::MAX } else { (1u64 << top_bits) - 1 };
    loop {
        let mut limbs: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
        if let Some(last) = limbs.last_mut() {
            *last &= mask;
        }
        let x = BigUint::from_slice(
            &limbs
                .iter()
                .flat_map(|&w| [w as u32, (w >> 32) as u32])
                .collect::<Vec<_>>(),
        );
        if &x < width {
            return x;
        }
    }
}

/// K_n over [X_n, X_{n+1}), computed on the scalar side.
pub fn summand_distribution(
    c: &RecurrenceVector,
    n: usize,
    mode: SampleMode,
    cap: u64,
) -> Result<SummandStats> {
    if !c.weakly_decreasing() {
        return Err(Error::NotWeaklyDecreasing);
    }
    if n == 0 {
        return Err(Error::DomainError { n: 0, min: 1 });
    }
    let mut seq = ScalarSequence::new(c);
    let lo = seq.term(n as i64);
    let hi = seq.term(n as i64 + 1);
    let width = &hi - &lo;
    let mut histogram = BTreeMap::new();
    match mode {
        SampleMode::Exact => {
            if width > BigInt::from(cap) {
                return Err(Error::CapExceeded {
                    size: width.to_string(),
                    cap,
                });
            }
            let mut x = lo.clone();
            while x < hi {
                let k = legal_decompose_scalar_with(&mut seq, &x).summands();
                *histogram.entry(k).or_insert(0) += 1;
                x += 1;
            }
        }
        SampleMode::Sampled { size, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = width.to_biguint().expect("sequence is increasing");
            for _ in 0..size {
                let x = &lo + BigInt::from_biguint(Sign::Plus, uniform_below(&mut rng, &w));
                let k = legal_decompose_scalar_with(&mut seq, &x).summands();
                *histogram.entry(k).or_insert(0) += 1;
            }
        }
    }
    Ok(SummandStats::from_histogram(c, n, mode, histogram))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn least_squares(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
        Self {
            slope,
            intercept,
            r_squared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeAtN {
    pub n: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LekkerkerkerCheck {
    pub fitted_slope: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianReport {
    pub mean_fit: LinearFit,
    pub variance_fit: LinearFit,
    pub shape: Vec<ShapeAtN>,
    /// Present only for c = (1,1).
    pub lekkerkerker: Option<LekkerkerkerCheck>,
}

pub fn gaussian_diagnostics(stats: &[SummandStats]) -> Result<GaussianReport> {
    if stats.len() < 3 {
        return Err(Error::DomainError {
            n: stats.len() as i64,
            min: 3,
        });
    }
    let xs: Vec<f64> = stats.iter().map(|s| s.n as f64).collect();
    let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let vars: Vec<f64> = stats.iter().map(|s| s.variance).collect();
    let mean_fit = LinearFit::least_squares(&xs, &means);
    let variance_fit = LinearFit::least_squares(&xs, &vars);
    let shape = stats
        .iter()
        .map(|s| ShapeAtN {
            n: s.n,
            skewness: s.skewness,
            excess_kurtosis: s.excess_kurtosis,
        })
        .collect();
    let lekkerkerker = (stats[0].c == [1, 1]).then(|| {
        let target = lekkerkerker_slope();
        LekkerkerkerCheck {
            fitted_slope: mean_fit.slope,
            target,
            deviation: mean_fit.slope - target,
        }
    });
    Ok(GaussianReport {
        mean_fit,
        variance_fit,
        shape,
        lekkerkerker,
    })
}

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// Breadth-first search for the fewest summands X⃗₋₁ … X⃗₋bound (with
/// repetition) that add up to a target. Levels are expanded lazily and shared
/// between queries.
pub struct MinimalityOracle {
    generators: Vec<LatticeVector>,
    dist: HashMap<LatticeVector, u64>,
    frontier: Vec<LatticeVector>,
    level: u64,
    node_cap: usize,
}

impl MinimalityOracle {
    pub fn new(c: &RecurrenceVector, support_bound: usize, node_cap: usize) -> Self {
        let generators = VectorSequence::new(c).negatives(support_bound).to_vec();
        let origin = LatticeVector::zero(c.dim());
        let mut dist = HashMap::new();
        dist.insert(origin.clone(), 0);
        Self {
            generators,
            dist,
            frontier: vec![origin],
            level: 0,
            node_cap,
        }
    }

    pub fn min_summands(&mut self, v: &LatticeVector) -> Result<u64> {
        loop {
            if let Some(&d) = self.dist.get(v) {
                return Ok(d);
            }
            if self.frontier.is_empty() {
                return Err(Error::OracleExhausted(self.dist.len()));
            }
            self.expand()?;
        }
    }

    fn expand(&mut self) -> Result<()> {
        self.level += 1;
        let mut next = Vec::new();
        for w in &self.frontier {
            for g in &self.generators {
                let s = w.add(g);
                if !self.dist.contains_key(&s) {
                    self.dist.insert(s.clone(), self.level);
                    next.push(s);
                    if self.dist.len() > self.node_cap {
                        return Err(Error::OracleExhausted(self.node_cap));
                    }
                }
            }
        }
        self.frontier = next;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinimalityReport {
    pub sr_count: u64,
    pub oracle_min: u64,
    pub minimal: bool,
}

pub fn check_minimality(
    c: &RecurrenceVector,
    v: &LatticeVector,
    support_bound: usize,
    node_cap: usize,
) -> Result<MinimalityReport> {
    let mut oracle = MinimalityOracle::new(c, support_bound, node_cap);
    check_with(c, v, &mut oracle)
}

pub fn check_with(
    c: &RecurrenceVector,
    v: &LatticeVector,
    oracle: &mut MinimalityOracle,
) -> Result<MinimalityReport> {
    let sr_count = coefficient_sum(&decompose(c, v)?);
    let oracle_min = oracle.min_summands(v)?;
    Ok(MinimalityReport {
        sr_count,
        oracle_min,
        minimal: sr_count == oracle_min,
    })
}

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 6 - 1 - x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits);
    let r = (x * scale).round() / scale;
    r.to_string().parse().unwrap_or(r)
}
