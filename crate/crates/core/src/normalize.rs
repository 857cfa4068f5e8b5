//! Carry/borrow rewriting: end-complete resolution, NSR normalization,
//! decomposition of arbitrary vectors and the termination / spanning probes.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::recurrence::{LatticeVector, RecurrenceVector, VectorSequence};
use crate::representation::{
    classify, first_overfill, slice_end_complete, trim, CoefficientString, SrKind,
};

pub const DEFAULT_BUDGET: usize = 10_000;
/// Steps kept verbatim before the trace switches to every 100th step.
pub const FULL_TRACE_STEPS: usize = 1_000;
const THIN_EVERY: usize = 100;
/// Slack (times k) on the support before a probe gives up.
const SUPPORT_SLACK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Op {
    Add,
    Borrow,
    Carry,
}

/// One rewriting record. `count` is the multiplicity: a borrow of 4 from the
/// same coefficient is a single record with `count = 4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub index: usize,
    pub op: Op,
    pub pos: usize,
    pub count: u64,
    pub string: CoefficientString,
    pub g: u64,
}

/// State at the top of one normalization round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationMark {
    pub step: usize,
    pub chunk_start: usize,
    pub overfill: usize,
    pub g: u64,
    /// G_{n_p}(a) for the chunk start n_p of this round.
    pub prefix_g: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizationTrace {
    pub steps: Vec<TraceStep>,
    pub step_count: usize,
    pub terminated: bool,
    pub g_history: Vec<u64>,
    pub iterations: Vec<IterationMark>,
    pub max_support: usize,
}

impl NormalizationTrace {
    fn push(&mut self, op: Op, pos: usize, count: u64, a: &[u64]) {
        self.step_count += 1;
        let g: u64 = a.iter().sum();
        self.g_history.push(g);
        self.max_support = self.max_support.max(support(a));
        if self.step_count <= FULL_TRACE_STEPS || self.step_count.is_multiple_of(THIN_EVERY) {
            self.steps.push(TraceStep {
                index: self.step_count,
                op,
                pos,
                count,
                string: CoefficientString::new(a.to_vec()),
                g,
            });
        }
    }

    pub fn strings(&self) -> impl Iterator<Item = &CoefficientString> {
        self.steps.iter().map(|s| &s.string)
    }
}

fn support(a: &[u64]) -> usize {
    a.iter().rposition(|&x| x != 0).map_or(0, |i| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Budget,
    SupportGrowth,
    Stall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Halt(StopReason),
    Overflow,
    Blocked,
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        match e {
            Error::Overflow => Stop::Overflow,
            _ => Stop::Blocked,
        }
    }
}

struct Recorder<'t> {
    trace: Option<&'t mut NormalizationTrace>,
    steps: usize,
    budget: usize,
}

impl<'t> Recorder<'t> {
    fn new(trace: Option<&'t mut NormalizationTrace>, budget: usize) -> Self {
        let steps = trace.as_ref().map_or(0, |t| t.step_count);
        Self {
            trace,
            steps,
            budget,
        }
    }

    fn record(&mut self, op: Op, pos: usize, count: u64, a: &[u64]) {
        self.steps += 1;
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(op, pos, count, a);
        }
    }

    fn check(&self) -> std::result::Result<(), Stop> {
        if self.steps >= self.budget {
            Err(Stop::Halt(StopReason::Budget))
        } else {
            Ok(())
        }
    }

    fn mark(&mut self, m: IterationMark) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.iterations.push(m);
        }
    }
}

fn ensure_len(a: &mut Vec<u64>, n: usize) {
    if a.len() < n {
        a.resize(n, 0);
    }
}

/// Carries `t` times into 1-based position `i`; position 0 is virtual.
fn carry_raw(c: &[u64], a: &mut Vec<u64>, i: usize, t: u64) -> Result<()> {
    for (l, &cl) in c.iter().enumerate() {
        let need = cl.checked_mul(t).ok_or(Error::Overflow)?;
        if a.get(i + l).copied().unwrap_or(0) < need {
            return Err(Error::CarryBlocked {
                pos: i,
                at: i + l + 1,
            });
        }
    }
    for (l, &cl) in c.iter().enumerate() {
        a[i + l] -= cl * t;
    }
    if i >= 1 {
        a[i - 1] = a[i - 1].checked_add(t).ok_or(Error::Overflow)?;
    }
    trim(a);
    Ok(())
}

/// Borrows `t` times from 1-based position `i ≥ 1`.
fn borrow_raw(c: &[u64], a: &mut Vec<u64>, i: usize, t: u64) -> Result<()> {
    if i == 0 || a.get(i - 1).copied().unwrap_or(0) < t || t == 0 {
        return Err(Error::BorrowBlocked(i));
    }
    ensure_len(a, i + c.len());
    for (l, &cl) in c.iter().enumerate() {
        let add = cl.checked_mul(t).ok_or(Error::Overflow)?;
        a[i + l] = a[i + l].checked_add(add).ok_or(Error::Overflow)?;
    }
    a[i - 1] -= t;
    trim(a);
    Ok(())
}

/// Def. carry: b_i = a_i + 1, b_{i+l} = a_{i+l} − c_l.
pub fn carry(c: &RecurrenceVector, a: &CoefficientString, i: usize) -> Result<CoefficientString> {
    let mut v = a.as_slice().to_vec();
    carry_raw(c.coeffs(), &mut v, i, 1)?;
    Ok(CoefficientString::new(v))
}

/// Def. borrow: d_i = a_i − 1, d_{i+l} = a_{i+l} + c_l.
pub fn borrow(c: &RecurrenceVector, a: &CoefficientString, i: usize) -> Result<CoefficientString> {
    let mut v = a.as_slice().to_vec();
    borrow_raw(c.coeffs(), &mut v, i, 1)?;
    Ok(CoefficientString::new(v))
}

/// Resolves the end-complete prefix a₁…a_len in place by repeatedly carrying
/// into the position just before its terminal copy of c.
fn resolve_prefix(
    c: &[u64],
    a: &mut Vec<u64>,
    mut len: usize,
    rec: &mut Recorder,
) -> std::result::Result<(), Stop> {
    let k = c.len();
    loop {
        let prefix = &a[..len.min(a.len())];
        let m = support(prefix);
        if m < k || !slice_end_complete(c, prefix) {
            break;
        }
        rec.check()?;
        let pos = m - k;
        carry_raw(c, a, pos, 1)?;
        rec.record(Op::Carry, pos, 1, a);
        len = pos;
    }
    Ok(())
}

pub fn resolve_end_complete(
    c: &RecurrenceVector,
    a: &CoefficientString,
) -> Result<(CoefficientString, NormalizationTrace)> {
    if !slice_end_complete(c.coeffs(), a.as_slice()) {
        return Err(Error::NotEndComplete);
    }
    let mut trace = NormalizationTrace::default();
    let mut v = a.as_slice().to_vec();
    let len = v.len();
    {
        let mut rec = Recorder::new(Some(&mut trace), usize::MAX);
        resolve_prefix(c.coeffs(), &mut v, len, &mut rec).map_err(stop_error)?;
    }
    trace.terminated = first_overfill(c.coeffs(), &v).is_none();
    Ok((CoefficientString::new(v), trace))
}

fn stop_error(s: Stop) -> Error {
    match s {
        Stop::Overflow => Error::Overflow,
        Stop::Blocked => Error::NonTermination("rewriting step unexpectedly blocked".into()),
        Stop::Halt(r) => Error::NonTermination(format!("{r:?}")),
    }
}

/// Rewriting schedule for one normalization round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// One borrow at the overfilled entry, one carry into the position before
    /// its chunk, then end-complete resolution. Needs weakly decreasing c.
    Proof,
    /// Borrow the whole excess at the overfilled entry, then sweep right
    /// carrying as much as the grammar allows at each position.
    Exploratory,
}

impl Schedule {
    pub fn for_recurrence(c: &RecurrenceVector) -> Self {
        if c.weakly_decreasing() {
            Schedule::Proof
        } else {
            Schedule::Exploratory
        }
    }
}

fn proof_round(c: &[u64], a: &mut Vec<u64>, np: usize, j: usize, pos: usize, rec: &mut Recorder)
    -> std::result::Result<(), Stop> {
    let k = c.len();
    if j + 1 < k {
        rec.check()?;
        borrow_raw(c, a, pos, 1)?;
        rec.record(Op::Borrow, pos, 1, a);
    }
    rec.check()?;
    carry_raw(c, a, np - 1, 1)?;
    rec.record(Op::Carry, np - 1, 1, a);
    if np > 1 {
        resolve_prefix(c, a, np - 1, rec)?;
    }
    Ok(())
}

fn exploratory_round(
    c: &[u64],
    a: &mut Vec<u64>,
    np: usize,
    j: usize,
    pos: usize,
    rec: &mut Recorder,
) -> std::result::Result<(), Stop> {
    let k = c.len();
    let before = a.clone();
    let excess = a[pos - 1] - c[j];
    if excess > 0 {
        rec.check()?;
        borrow_raw(c, a, pos, excess)?;
        rec.record(Op::Borrow, pos, excess, a);
    }
    let mut p = np - 1;
    while p <= a.len() {
        ensure_len(a, p + k);
        let tmax = c
            .iter()
            .enumerate()
            .filter(|(_, &cl)| cl > 0)
            .map(|(l, &cl)| a[p + l] / cl)
            .min()
            .unwrap_or(0);
        let mut chosen = None;
        let mut t = tmax;
        while t > 0 {
            if p == 0 {
                chosen = Some((t, false));
                break;
            }
            let mut prefix = a[..p].to_vec();
            prefix[p - 1] += t;
            if first_overfill(c, &prefix).is_none() {
                chosen = Some((t, false));
                break;
            }
            if slice_end_complete(c, &prefix) {
                chosen = Some((t, true));
                break;
            }
            t -= 1;
        }
        if let Some((t, end_complete)) = chosen {
            rec.check()?;
            carry_raw(c, a, p, t)?;
            rec.record(Op::Carry, p, t, a);
            if end_complete {
                resolve_prefix(c, a, p, rec)?;
            }
        }
        trim(a);
        p += 1;
    }
    trim(a);
    if *a == before {
        return Err(Stop::Halt(StopReason::Stall));
    }
    Ok(())
}

/// Evidence that a probe keeps regenerating the same tail further out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecurringSuffix {
    pub suffix: Vec<u64>,
    pub first_start: usize,
    pub repeat_start: usize,
}

impl RecurringSuffix {
    pub fn shift(&self) -> usize {
        self.repeat_start - self.first_start
    }
}

#[derive(Default)]
struct SuffixWatch {
    seen: HashMap<Vec<u64>, usize>,
    found: Option<RecurringSuffix>,
}

impl SuffixWatch {
    fn observe(&mut self, a: &[u64], start: usize) {
        if self.found.is_some() {
            return;
        }
        let key = a[start - 1..].to_vec();
        match self.seen.get(&key) {
            Some(&first) if first < start => {
                self.found = Some(RecurringSuffix {
                    suffix: key,
                    first_start: first,
                    repeat_start: start,
                });
            }
            Some(_) => {}
            None => {
                self.seen.insert(key, start);
            }
        }
    }
}

fn run(
    c: &RecurrenceVector,
    a: &mut Vec<u64>,
    schedule: Schedule,
    rec: &mut Recorder,
    mut watch: Option<&mut SuffixWatch>,
) -> std::result::Result<(), Stop> {
    let cs = c.coeffs();
    let support_limit = (!c.weakly_decreasing()).then(|| a.len() + SUPPORT_SLACK * c.k());
    while let Some(over) = first_overfill(cs, a) {
        rec.check()?;
        let np = over.chunk_start;
        rec.mark(IterationMark {
            step: rec.steps,
            chunk_start: np,
            overfill: over.pos,
            g: a.iter().sum(),
            prefix_g: a[..np - 1].iter().sum(),
        });
        if let Some(w) = watch.as_deref_mut() {
            w.observe(a, np);
        }
        match schedule {
            Schedule::Proof => proof_round(cs, a, np, over.matched, over.pos, rec)?,
            Schedule::Exploratory => exploratory_round(cs, a, np, over.matched, over.pos, rec)?,
        }
        if let Some(limit) = support_limit {
            if a.len() > limit {
                return Err(Stop::Halt(StopReason::SupportGrowth));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    Terminated {
        result: CoefficientString,
        steps: usize,
    },
    BudgetExceeded {
        reason: StopReason,
        max_support: usize,
        steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReport {
    pub outcome: ProbeOutcome,
    pub budget: usize,
    pub trace: NormalizationTrace,
    pub recurring_suffix: Option<RecurringSuffix>,
}

impl ProbeReport {
    pub fn terminated(&self) -> bool {
        matches!(self.outcome, ProbeOutcome::Terminated { .. })
    }
}

fn probe(
    c: &RecurrenceVector,
    a: &CoefficientString,
    budget: usize,
    schedule: Schedule,
    detect: bool,
) -> Result<ProbeReport> {
    if !matches!(classify(c, a).kind, SrKind::Nsr { .. }) {
        return Err(Error::NotNsr);
    }
    let mut trace = NormalizationTrace {
        max_support: a.len(),
        ..Default::default()
    };
    let mut watch = detect.then(SuffixWatch::default);
    let mut v = a.as_slice().to_vec();
    let res = {
        let mut rec = Recorder::new(Some(&mut trace), budget);
        run(c, &mut v, schedule, &mut rec, watch.as_mut())
    };
    let outcome = match res {
        Ok(()) => {
            trace.terminated = true;
            ProbeOutcome::Terminated {
                result: CoefficientString::new(v),
                steps: trace.step_count,
            }
        }
        Err(Stop::Halt(reason)) => ProbeOutcome::BudgetExceeded {
            reason,
            max_support: trace.max_support,
            steps: trace.step_count,
        },
        Err(s) => return Err(stop_error(s)),
    };
    Ok(ProbeReport {
        outcome,
        budget,
        trace,
        recurring_suffix: watch.and_then(|w| w.found),
    })
}

/// Normalizes a nearly satisfying representation under a step budget.
pub fn normalize_nsr(c: &RecurrenceVector, a: &CoefficientString, budget: usize) -> Result<ProbeReport> {
    probe(c, a, budget, Schedule::for_recurrence(c), false)
}

/// As `normalize_nsr` with an explicit schedule.
pub fn normalize_with(
    c: &RecurrenceVector,
    a: &CoefficientString,
    budget: usize,
    schedule: Schedule,
) -> Result<ProbeReport> {
    probe(c, a, budget, schedule, false)
}

/// `normalize_nsr` plus divergence evidence (support growth, recurring tails).
pub fn probe_termination(c: &RecurrenceVector, a: &CoefficientString, budget: usize) -> Result<ProbeReport> {
    probe(c, a, budget, Schedule::for_recurrence(c), true)
}

fn budget_for(c: &RecurrenceVector) -> usize {
    if c.weakly_decreasing() {
        usize::MAX
    } else {
        DEFAULT_BUDGET
    }
}

/// Adds `times` copies of X⃗₋ᵢ to the satisfying representation in `a`,
/// renormalizing after each one.
fn increment_raw(
    c: &RecurrenceVector,
    a: &mut Vec<u64>,
    i: usize,
    times: u64,
    trace: Option<&mut NormalizationTrace>,
) -> Result<()> {
    let schedule = Schedule::for_recurrence(c);
    let mut rec = Recorder::new(trace, usize::MAX);
    for _ in 0..times {
        ensure_len(a, i);
        a[i - 1] = a[i - 1].checked_add(1).ok_or(Error::Overflow)?;
        rec.record(Op::Add, i, 1, a);
        rec.budget = rec.steps.saturating_add(budget_for(c));
        run(c, a, schedule, &mut rec, None).map_err(stop_error)?;
        rec.budget = usize::MAX;
    }
    Ok(())
}

/// Adds X⃗₋ᵢ to a satisfying representation and renormalizes.
pub fn increment(c: &RecurrenceVector, a: &CoefficientString, i: usize) -> Result<CoefficientString> {
    let (out, _) = increment_traced(c, a, i)?;
    Ok(out)
}

pub fn increment_traced(
    c: &RecurrenceVector,
    a: &CoefficientString,
    i: usize,
) -> Result<(CoefficientString, NormalizationTrace)> {
    if i == 0 {
        return Err(Error::DomainError { n: 0, min: 1 });
    }
    if first_overfill(c.coeffs(), a.as_slice()).is_some() {
        return Err(Error::NotSatisfying);
    }
    let mut trace = NormalizationTrace::default();
    let mut v = a.as_slice().to_vec();
    increment_raw(c, &mut v, i, 1, Some(&mut trace))?;
    trace.terminated = true;
    Ok((CoefficientString::new(v), trace))
}

/// Adds `delta` to the vector represented by the satisfying representation
/// `a`: t·X⃗₋ₖ first, with t just large enough to make the rest nonnegative,
/// then the unit vectors X⃗₋ⱼ = eⱼ.
pub fn add_vector(
    c: &RecurrenceVector,
    a: &CoefficientString,
    delta: &LatticeVector,
) -> Result<CoefficientString> {
    let mut v = a.as_slice().to_vec();
    add_vector_raw(c, &mut v, delta, None)?;
    Ok(CoefficientString::new(v))
}

fn add_vector_raw(
    c: &RecurrenceVector,
    a: &mut Vec<u64>,
    delta: &LatticeVector,
    mut trace: Option<&mut NormalizationTrace>,
) -> Result<()> {
    if !c.weakly_decreasing() {
        return Err(Error::NotWeaklyDecreasing);
    }
    if delta.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: delta.dim(),
        });
    }
    let mut t = BigInt::zero();
    for (j, x) in delta.0.iter().enumerate() {
        if x < &BigInt::zero() {
            let cj = BigInt::from(c.c(j + 1));
            t = t.max((-x).div_ceil(&cj));
        }
    }
    let count = |b: &BigInt| b.to_u64().ok_or(Error::Overflow);
    increment_raw(c, a, c.k(), count(&t)?, trace.as_deref_mut())?;
    for (j, x) in delta.0.iter().enumerate() {
        let n = x + &t * c.c(j + 1);
        increment_raw(c, a, j + 1, count(&n)?, trace.as_deref_mut())?;
    }
    Ok(())
}

/// The unique satisfying representation of `v`.
pub fn decompose(c: &RecurrenceVector, v: &LatticeVector) -> Result<CoefficientString> {
    add_vector(c, &CoefficientString::empty(), v)
}

pub fn decompose_traced(
    c: &RecurrenceVector,
    v: &LatticeVector,
) -> Result<(CoefficientString, NormalizationTrace)> {
    let mut trace = NormalizationTrace::default();
    let mut a = Vec::new();
    add_vector_raw(c, &mut a, v, Some(&mut trace))?;
    trace.terminated = true;
    Ok((CoefficientString::new(a), trace))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanReport {
    pub all_representable: bool,
    pub failures: Vec<LatticeVector>,
    /// Largest total multiplicity of X⃗₋ₖ… used in the search.
    pub tail_terms: usize,
}

/// Checks that every v with |v|∞ ≤ radius is a nonnegative combination of
/// X⃗₋₁ … X⃗₋bound. Since X⃗₋₁ … X⃗₋₍ₖ₋₁₎ are the unit vectors, v is
/// representable iff some combination w of the remaining generators has
/// w ≤ v componentwise. Combinations are searched up to a total
/// multiplicity of (radius + 1)·bound.
pub fn spanning_probe(c: &RecurrenceVector, radius: u64, support_bound: usize) -> Result<SpanReport> {
    let k = c.k();
    let min = k + c.longest_zero_run();
    if support_bound < min {
        return Err(Error::DomainError {
            n: support_bound as i64,
            min: min as i64,
        });
    }
    let dim = c.dim();
    let mut seq = VectorSequence::new(c);
    let gens: Vec<LatticeVector> = seq.negatives(support_bound)[k - 1..].to_vec();
    let tail_terms = (radius as usize + 1) * support_bound;

    let mut reached: HashSet<LatticeVector> = HashSet::new();
    let mut frontier = vec![LatticeVector::zero(dim)];
    reached.insert(LatticeVector::zero(dim));
    for _ in 0..tail_terms {
        let mut next = Vec::new();
        for w in &frontier {
            for g in &gens {
                let s = w.add(g);
                if reached.insert(s.clone()) {
                    next.push(s);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    let r = radius as i64;
    let mut failures = Vec::new();
    let mut point = vec![-r; dim];
    loop {
        let v = LatticeVector::from_i64(&point);
        if !reached.iter().any(|w| w.0.iter().zip(&v.0).all(|(x, y)| x <= y)) {
            failures.push(v);
        }
        let mut d = 0;
        while d < dim {
            if point[d] < r {
                point[d] += 1;
                break;
            }
            point[d] = -r;
            d += 1;
        }
        if d == dim {
            break;
        }
    }
    Ok(SpanReport {
        all_representable: failures.is_empty(),
        failures,
        tail_terms,
    })
}
