//! Segmented interval sieving against a base [`FactorTable`].
//!
//! A block `[lo, hi]` is resolved in three phases:
//!
//! 1. primes `hi/M < p <= sqrt(hi)`, largest first: stripping `p` and then any
//!    2, 3, 5 leaves a cofactor inside the table;
//! 2. primes `7 <= p <= hi/M`, largest first: the cofactor may still exceed
//!    `M`, so it is trial-divided until it drops below `M` or is prime;
//! 3. whatever is left has the shape `2^i 3^j 5^k q` with `q` one or a prime.
//!
//! Scratch is two bits per integer in the parity modes and one byte per
//! integer in the value mode.

use std::sync::Arc;

use rayon::prelude::*;

use crate::arith::{integral_term, kronecker_unchecked, ExactAccumulator, Family, SumSpec};
use crate::error::{Error, Result};
use crate::primes::primes_up_to;
use crate::series::{Excursion, Extremum, NormalizationRule, Threshold, ThresholdTracker};
use crate::table::{isqrt, FactorTable, TableMode};

/// Where samples are taken inside a work unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampling {
    /// Every multiple of this many integers.
    pub stride: Option<u64>,
    /// Points `ceil(exp(k * du))` of a uniform grid in `u = ln x`.
    pub u_step: Option<f64>,
    /// Extra explicit points.
    pub points: Vec<u64>,
    /// A sample at the end of every block.
    pub block_ends: bool,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { stride: None, u_step: Some(0.01), points: Vec::new(), block_ends: true }
    }
}

impl Sampling {
    pub fn none() -> Self {
        Sampling { stride: None, u_step: None, points: Vec::new(), block_ends: false }
    }

    /// Sample points in `[a, b]` other than block ends, ascending and unique.
    pub(crate) fn points_in(&self, a: u64, b: u64) -> Vec<u64> {
        let mut pts: Vec<u64> = self.points.iter().copied().filter(|&x| x >= a && x <= b).collect();
        if let Some(s) = self.stride.filter(|&s| s > 0) {
            let mut x = a.div_ceil(s) * s;
            while x <= b {
                pts.push(x);
                x += s;
            }
        }
        if let Some(du) = self.u_step.filter(|&d| d > 0.0) {
            let k0 = ((a as f64).ln() / du).floor().max(0.0) as u64;
            let mut k = k0;
            loop {
                let x = ((k as f64) * du).exp().ceil() as u64;
                if x > b {
                    break;
                }
                if x >= a {
                    pts.push(x);
                }
                k += 1;
            }
        }
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

/// One independent stretch `[a, b]` of the range.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkUnit {
    pub a: u64,
    pub b: u64,
    pub block_size: u64,
    pub specs: Vec<SumSpec>,
    pub sampling: Sampling,
    pub thresholds: Vec<Threshold>,
    /// Extrema are only tracked for `x >= extrema_from`.
    pub extrema_from: u64,
    /// Absolute sums at `a - 1` when known; extrema and crossings are then absolute.
    pub start: Option<Vec<ExactAccumulator>>,
}

impl WorkUnit {
    pub fn new(a: u64, b: u64, specs: Vec<SumSpec>) -> Self {
        WorkUnit {
            a,
            b,
            block_size: DEFAULT_BLOCK_SIZE,
            specs,
            sampling: Sampling::default(),
            thresholds: Vec::new(),
            extrema_from: 1,
            start: None,
        }
    }

    pub fn with_block_size(mut self, block_size: u64) -> Self {
        self.block_size = block_size;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_thresholds(mut self, thresholds: Vec<Threshold>) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_start(mut self, start: Vec<ExactAccumulator>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn with_extrema_from(mut self, x: u64) -> Self {
        self.extrema_from = x;
        self
    }

    /// Offsets actually used: the supplied start, or exact zeros (also exact when `a == 1`).
    pub fn offsets(&self) -> Vec<ExactAccumulator> {
        self.start.clone().unwrap_or_else(|| self.specs.iter().map(ExactAccumulator::zero_for).collect())
    }

    /// True when extrema and crossings computed for this unit are absolute.
    pub fn offsets_known(&self) -> bool {
        self.a == 1 || self.start.is_some()
    }

    pub(crate) fn validate(&self, table: &FactorTable) -> Result<()> {
        if self.a == 0 || self.a > self.b || self.block_size == 0 {
            return Err(Error::BadInterval { a: self.a, b: self.b });
        }
        for s in &self.specs {
            if !table.mode().supports(s) {
                return Err(Error::UnsupportedPairing { mode: table.mode(), spec: s.label() });
            }
        }
        if let Some(st) = &self.start {
            if st.len() != self.specs.len() {
                return Err(Error::SpecMismatch);
            }
        }
        for t in &self.thresholds {
            if t.spec >= self.specs.len() {
                return Err(Error::InvalidSpec(format!("threshold refers to spec #{}", t.spec)));
            }
        }
        Ok(())
    }
}

pub const DEFAULT_BLOCK_SIZE: u64 = 25_000_000;

/// One sample: `x` and each spec's sum relative to the unit start.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: u64,
    pub values: Vec<ExactAccumulator>,
}

/// Output of [`sieve_interval`].
#[derive(Clone, Debug, PartialEq)]
pub struct BlockResult {
    pub unit: WorkUnit,
    /// Per-spec sums over `[a, b]`.
    pub deltas: Vec<ExactAccumulator>,
    pub samples: Vec<Sample>,
    /// Per-spec (max, min) of the normalized value, relative to the unit's offsets.
    pub extrema: Vec<(Option<Extremum>, Option<Extremum>)>,
    /// Per-threshold violation excursions, relative to the unit's offsets.
    pub crossings: Vec<Vec<Excursion>>,
    /// Set when phase 1 had no primes (`M^2 < b`).
    pub thin_table: bool,
}

/// Factor information for one integer, in the form the table mode provides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Resolved {
    /// `Omega(n)` (value mode) or its parity; for the omega-distinct mode, the parity of `omega(n)`.
    pub val: u32,
}

enum Scratch {
    /// two bits per integer: 00 unknown, 10 even, 11 odd
    Packed(Vec<u64>),
    /// one byte per integer, 0xFF unknown
    Bytes(Vec<u8>),
}

impl Scratch {
    fn new(mode: TableMode, len: usize) -> Self {
        match mode {
            TableMode::OmegaValue => Scratch::Bytes(vec![0xFF; len]),
            _ => Scratch::Packed(vec![0; len.div_ceil(32)]),
        }
    }

    fn reset(&mut self, len: usize) {
        match self {
            Scratch::Bytes(v) => {
                v.clear();
                v.resize(len, 0xFF);
            }
            Scratch::Packed(v) => {
                v.clear();
                v.resize(len.div_ceil(32), 0);
            }
        }
    }

    #[inline]
    fn known(&self, i: usize) -> bool {
        match self {
            Scratch::Bytes(v) => v[i] != 0xFF,
            Scratch::Packed(v) => (v[i / 32] >> (2 * (i % 32))) & 0b10 != 0,
        }
    }

    #[inline]
    fn set(&mut self, i: usize, val: u32) {
        match self {
            Scratch::Bytes(v) => v[i] = val as u8,
            Scratch::Packed(v) => v[i / 32] |= (0b10 | (val as u64 & 1)) << (2 * (i % 32)),
        }
    }

    #[inline]
    fn get(&self, i: usize) -> u32 {
        match self {
            Scratch::Bytes(v) => v[i] as u32,
            Scratch::Packed(v) => ((v[i / 32] >> (2 * (i % 32))) & 1) as u32,
        }
    }
}

/// Resolves blocks of consecutive integers against a table.
pub(crate) struct BlockSieve<'t> {
    table: &'t FactorTable,
    /// primes 7 <= p <= sqrt(b_max)
    primes: Arc<[u64]>,
    scratch: Scratch,
}

impl<'t> BlockSieve<'t> {
    #[cfg(test)]
    pub fn new(table: &'t FactorTable, b_max: u64) -> Self {
        let primes: Arc<[u64]> = primes_up_to(isqrt(b_max)).into_iter().filter(|&p| p >= 7).collect();
        Self::with_primes(table, primes)
    }

    fn with_primes(table: &'t FactorTable, primes: Arc<[u64]>) -> Self {
        BlockSieve { table, primes, scratch: Scratch::new(table.mode(), 0) }
    }

    /// Whether phase 1 is empty for blocks ending at `hi`.
    pub fn phase_one_empty(&self, hi: u64) -> bool {
        let m = self.table.limit();
        let root = isqrt(hi);
        !self.primes.iter().any(|&p| p > hi / m && p <= root)
    }

    /// Combine stripped prime-power counts with the table entry of the cofactor `c`
    /// (`c` coprime to 30 and inside the table).
    #[inline]
    fn combine(&self, big: u32, distinct: u32, c: u64) -> u32 {
        let t = self.table;
        match t.mode() {
            TableMode::OmegaValue => big + if c == 1 { 0 } else { t.entry(c) as u32 },
            TableMode::ParityNMinusOmega => (big + if c == 1 { 0 } else { t.omega_parity(c) }) & 1,
            TableMode::ParityOmegaDistinct => (distinct + if c == 1 { 0 } else { t.entry(c) as u32 }) & 1,
        }
    }

    /// Remove 2, 3, 5 from `c`, returning the cofactor and updated counts.
    #[inline]
    fn strip_small(mut c: u64, mut big: u32, mut distinct: u32) -> (u64, u32, u32) {
        let tz = c.trailing_zeros();
        if tz > 0 {
            c >>= tz;
            big += tz;
            distinct += 1;
        }
        for q in [3u64, 5] {
            if c % q == 0 {
                distinct += 1;
                while c % q == 0 {
                    c /= q;
                    big += 1;
                }
            }
        }
        (c, big, distinct)
    }

    /// Resolve every integer in `[lo, hi]`; afterwards [`Self::get`] is valid for them.
    pub fn sieve(&mut self, lo: u64, hi: u64) {
        let len = (hi - lo + 1) as usize;
        self.scratch.reset(len);
        let m = self.table.limit();
        let root = isqrt(hi);
        let split = hi / m;
        let top = self.primes.partition_point(|&p| p <= root);
        let all = Arc::clone(&self.primes);
        let primes = &all[..top];
        let mid = primes.partition_point(|&p| p <= split);

        // phase 1: cofactor always lands in the table
        for &p in primes[mid..].iter().rev() {
            let mut n = lo.div_ceil(p) * p;
            while n <= hi {
                let i = (n - lo) as usize;
                if !self.scratch.known(i) {
                    let (mut c, mut e) = (n / p, 1);
                    while c % p == 0 {
                        c /= p;
                        e += 1;
                    }
                    let (c, big, distinct) = Self::strip_small(c, e, 1);
                    let v = self.combine(big, distinct, c);
                    self.scratch.set(i, v);
                }
                n += p;
            }
        }

        // phase 2: cofactor may exceed the table
        for (k, &p) in primes[..mid].iter().enumerate().rev() {
            let mut n = lo.div_ceil(p) * p;
            while n <= hi {
                let i = (n - lo) as usize;
                if !self.scratch.known(i) {
                    let (mut c, mut e) = (n / p, 1);
                    while c % p == 0 {
                        c /= p;
                        e += 1;
                    }
                    let (mut c, mut big, mut distinct) = Self::strip_small(c, e, 1);
                    // every prime factor of c is below p or above sqrt(hi)
                    let mut j = 0;
                    while c > m && j < k {
                        let q = primes[j];
                        if q * q > c {
                            break;
                        }
                        if c % q == 0 {
                            distinct += 1;
                            while c % q == 0 {
                                c /= q;
                                big += 1;
                            }
                        }
                        j += 1;
                    }
                    let v = if c <= m {
                        self.combine(big, distinct, c)
                    } else {
                        // c is prime
                        self.combine(big + 1, distinct + 1, 1)
                    };
                    self.scratch.set(i, v);
                }
                n += p;
            }
        }

        // phase 3: n = 2^i 3^j 5^k q with q = 1 or q prime
        for i in 0..len {
            if !self.scratch.known(i) {
                let n = lo + i as u64;
                let (q, big, distinct) = Self::strip_small(n, 0, 0);
                debug_assert!(q == 1 || crate::primes::is_prime(q), "n = {n}, q = {q}");
                let v = if q == 1 { self.combine(big, distinct, 1) } else { self.combine(big + 1, distinct + 1, 1) };
                self.scratch.set(i, v);
            }
        }
    }

    /// Factor information for `lo + i` after [`Self::sieve`].
    #[inline]
    pub fn get(&self, i: usize) -> Resolved {
        Resolved { val: self.scratch.get(i) }
    }

    pub fn mode(&self) -> TableMode {
        self.table.mode()
    }
}

/// Precomputed per-spec term evaluation.
#[derive(Clone, Debug)]
pub(crate) struct TermEval {
    family: Family,
    alpha: f64,
    /// `(d/n)` over one period `|d|` (index `n mod |d|`)
    kron: Vec<i8>,
}

impl TermEval {
    pub fn new(spec: &SumSpec) -> Self {
        let kron = match spec.family() {
            Family::TwistedS(d) => {
                let q = d.unsigned_abs().max(1);
                (0..q).map(|r| if r == 0 { kronecker_unchecked(d as i128, q) } else { kronecker_unchecked(d as i128, r) }).collect()
            }
            _ => Vec::new(),
        };
        TermEval { family: spec.family(), alpha: spec.alpha(), kron }
    }

    /// Integer term, given the resolved value in the table's mode.
    #[inline]
    pub fn integral(&self, n: u64, r: Resolved, mode: TableMode) -> i64 {
        let (big, small) = match mode {
            TableMode::OmegaValue => (r.val, 0),
            TableMode::ParityNMinusOmega => (r.val, 0),
            TableMode::ParityOmegaDistinct => (0, r.val),
        };
        let kron = if self.kron.is_empty() { 0 } else { self.kron[(n % self.kron.len() as u64) as usize] };
        integral_term(self.family, n, big, small, kron)
    }

    /// `n^-alpha`
    #[inline]
    pub fn weight(&self, n: u64) -> f64 {
        let x = n as f64;
        if self.alpha == 1.0 {
            1.0 / x
        } else if self.alpha == 0.5 {
            1.0 / x.sqrt()
        } else {
            x.powf(-self.alpha)
        }
    }
}

/// Running state of one work unit; shared by [`sieve_interval`] and the checkpointing runner.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalState {
    /// Next integer to process.
    pub next: u64,
    /// Per-spec sums relative to the unit start.
    pub running: Vec<ExactAccumulator>,
    pub samples: Vec<Sample>,
    pub extrema: Vec<(Option<Extremum>, Option<Extremum>)>,
    pub trackers: Vec<ThresholdTracker>,
    pub blocks_done: u64,
    pub thin_table: bool,
}

impl IntervalState {
    pub fn new(unit: &WorkUnit) -> Self {
        IntervalState {
            next: unit.a,
            running: unit.specs.iter().map(ExactAccumulator::zero_for).collect(),
            samples: Vec::new(),
            extrema: vec![(None, None); unit.specs.len()],
            trackers: unit.thresholds.iter().map(ThresholdTracker::new).collect(),
            blocks_done: 0,
            thin_table: false,
        }
    }

    pub fn finished(&self, unit: &WorkUnit) -> bool {
        self.next > unit.b
    }

    pub fn into_result(mut self, unit: &WorkUnit) -> BlockResult {
        let crossings = self.trackers.iter_mut().map(|t| t.finish()).collect();
        BlockResult {
            unit: unit.clone(),
            deltas: self.running,
            samples: self.samples,
            extrema: self.extrema,
            crossings,
            thin_table: self.thin_table,
        }
    }
}

/// Everything needed to advance an [`IntervalState`] block by block.
///
/// With several workers, consecutive blocks are sieved concurrently and then
/// consumed in order, so the state after each block does not depend on the worker count.
pub struct IntervalRunner<'t> {
    unit: WorkUnit,
    sieves: Vec<BlockSieve<'t>>,
    terms: Vec<TermEval>,
    rules: Vec<NormalizationRule>,
    offsets: Vec<ExactAccumulator>,
    points: Vec<u64>,
}

impl<'t> IntervalRunner<'t> {
    pub fn new(unit: WorkUnit, table: &'t FactorTable) -> Result<Self> {
        Self::with_workers(unit, table, 1)
    }

    pub fn with_workers(unit: WorkUnit, table: &'t FactorTable, workers: usize) -> Result<Self> {
        unit.validate(table)?;
        let rules = unit.specs.iter().map(NormalizationRule::for_spec).collect::<Result<Vec<_>>>()?;
        let terms = unit.specs.iter().map(TermEval::new).collect();
        let offsets = unit.offsets();
        let points = unit.sampling.points_in(unit.a, unit.b);
        let primes: Arc<[u64]> = primes_up_to(isqrt(unit.b)).into_iter().filter(|&p| p >= 7).collect();
        let sieves = (0..workers.max(1)).map(|_| BlockSieve::with_primes(table, Arc::clone(&primes))).collect();
        Ok(IntervalRunner { sieves, unit, terms, rules, offsets, points })
    }

    pub fn unit(&self) -> &WorkUnit {
        &self.unit
    }

    /// Process up to one block per worker; returns false once the unit is exhausted.
    pub fn step(&mut self, st: &mut IntervalState) -> bool {
        if st.finished(&self.unit) {
            return false;
        }
        let mut ranges = Vec::with_capacity(self.sieves.len());
        let mut lo = st.next;
        while ranges.len() < self.sieves.len() && lo <= self.unit.b {
            let hi = lo.saturating_add(self.unit.block_size - 1).min(self.unit.b);
            ranges.push((lo, hi));
            lo = hi + 1;
        }
        let active = &mut self.sieves[..ranges.len()];
        if active.len() == 1 {
            active[0].sieve(ranges[0].0, ranges[0].1);
        } else {
            active.par_iter_mut().zip(ranges.par_iter()).for_each(|(sv, &(lo, hi))| sv.sieve(lo, hi));
        }
        for (i, &(lo, hi)) in ranges.iter().enumerate() {
            if self.sieves[i].phase_one_empty(hi) {
                st.thin_table = true;
            }
            self.consume(i, st, lo, hi);
            st.next = hi + 1;
            st.blocks_done += 1;
            if self.unit.sampling.block_ends && st.samples.last().is_none_or(|s| s.x != hi) {
                st.samples.push(Sample { x: hi, values: st.running.clone() });
            }
        }
        true
    }

    fn consume(&self, which: usize, st: &mut IntervalState, lo: u64, hi: u64) {
        let sieve = &self.sieves[which];
        let mode = sieve.mode();
        let unit = &self.unit;
        let mut pt = self.points.partition_point(|&x| x < lo);
        let track_extrema = hi >= unit.extrema_from;
        for (i, n) in (lo..=hi).enumerate() {
            let r = sieve.get(i);
            for (k, term) in self.terms.iter().enumerate() {
                let t = term.integral(n, r, mode);
                let acc = &mut st.running[k];
                match acc {
                    ExactAccumulator::Int { .. } => acc.add_int(t),
                    ExactAccumulator::Real { .. } => {
                        let w = term.weight(n);
                        acc.add_real(if t < 0 { -w } else { w });
                    }
                }
            }
            if track_extrema && n >= unit.extrema_from {
                for k in 0..self.terms.len() {
                    let v = absolute(&self.offsets[k], &st.running[k]);
                    let z = self.rules[k].normalize(n, v);
                    update_extrema(&mut st.extrema[k], n, z);
                }
            }
            for (th, tracker) in unit.thresholds.iter().zip(st.trackers.iter_mut()) {
                let k = th.spec;
                let violated = match (&self.offsets[k], &st.running[k]) {
                    (ExactAccumulator::Int { .. }, run) => {
                        let v = self.offsets[k].int_value().unwrap() + run.int_value().unwrap();
                        th.violated_int(n, v)
                    }
                    (off, run) => th.violated_real(n, off.value() + run.value()),
                };
                if violated {
                    let v = absolute(&self.offsets[k], &st.running[k]);
                    tracker.observe_violation(n, self.rules[k].normalize(n, v));
                } else {
                    tracker.observe_ok();
                }
            }
            while pt < self.points.len() && self.points[pt] == n {
                st.samples.push(Sample { x: n, values: st.running.clone() });
                pt += 1;
            }
        }
    }
}

#[inline]
fn absolute(off: &ExactAccumulator, run: &ExactAccumulator) -> crate::dd::Dd {
    match (off, run) {
        (ExactAccumulator::Int { .. }, ExactAccumulator::Int { .. }) => {
            crate::dd::Dd::from_i128(off.int_value().unwrap() + run.int_value().unwrap())
        }
        _ => off.value() + run.value(),
    }
}

#[inline]
fn update_extrema(slot: &mut (Option<Extremum>, Option<Extremum>), x: u64, z: f64) {
    match &mut slot.0 {
        Some(e) if z < e.value => {}
        Some(e) if z == e.value => e.ties += 1,
        s => *s = Some(Extremum { x, value: z, ties: 1 }),
    }
    match &mut slot.1 {
        Some(e) if z > e.value => {}
        Some(e) if z == e.value => e.ties += 1,
        s => *s = Some(Extremum { x, value: z, ties: 1 }),
    }
}

/// Sieve a whole work unit.
pub fn sieve_interval(unit: &WorkUnit, table: &FactorTable) -> Result<BlockResult> {
    let mut runner = IntervalRunner::new(unit.clone(), table)?;
    let mut st = IntervalState::new(unit);
    while runner.step(&mut st) {}
    Ok(st.into_result(unit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{oracle_prefix_sums, oracle_sum, ORACLE_LIMIT};
    use crate::table::build_base_table;

    #[test]
    fn sieve_matches_oracle_omega_values() {
        // small table forces phase 2 and trial division
        let table = build_base_table(1000, TableMode::OmegaValue).unwrap();
        let mut bs = BlockSieve::new(&table, 2_000_000);
        for &(lo, hi) in &[(1u64, 5000u64), (999_000, 1_000_999), (1_999_000, 2_000_000)] {
            bs.sieve(lo, hi);
            for n in lo..=hi {
                assert_eq!(bs.get((n - lo) as usize).val, crate::arith::big_omega(n), "n = {n}");
            }
        }
    }

    #[test]
    fn sieve_parity_and_distinct_modes() {
        for mode in [TableMode::ParityNMinusOmega, TableMode::ParityOmegaDistinct] {
            let table = build_base_table(3000, mode).unwrap();
            let mut bs = BlockSieve::new(&table, 1_000_000);
            let (lo, hi) = (990_001, 1_000_000);
            bs.sieve(lo, hi);
            for n in lo..=hi {
                let f = crate::arith::factorize(n);
                let want = match mode {
                    TableMode::ParityOmegaDistinct => f.small_omega() & 1,
                    _ => f.big_omega() & 1,
                };
                assert_eq!(bs.get((n - lo) as usize).val, want, "n = {n}");
            }
        }
    }

    #[test]
    fn unit_delta_matches_oracle_difference() {
        let table = build_base_table(1_000_000, TableMode::ParityNMinusOmega).unwrap();
        let s0 = SumSpec::sun(0.0).unwrap();
        let unit = WorkUnit::new(1_000_001, 2_000_000, vec![s0]).with_block_size(250_000);
        let r = sieve_interval(&unit, &table).unwrap();
        let hi = oracle_sum(&s0, 2_000_000).unwrap().int_value().unwrap();
        let lo = oracle_sum(&s0, 1_000_000).unwrap().int_value().unwrap();
        assert_eq!(r.deltas[0].int_value().unwrap(), hi - lo);
        assert!(!r.thin_table);
    }

    #[test]
    fn single_integer_unit() {
        let table = build_base_table(30, TableMode::ParityNMinusOmega).unwrap();
        let unit = WorkUnit::new(1, 1, vec![SumSpec::polya(0.0).unwrap()]);
        let r = sieve_interval(&unit, &table).unwrap();
        assert_eq!(r.deltas[0].int_value(), Some(1));
    }

    #[test]
    fn grosswald_reaches_table_value() {
        let table = build_base_table(10_000, TableMode::OmegaValue).unwrap();
        let w = SumSpec::grosswald();
        let start = oracle_sum(&w, 3078).unwrap();
        let unit = WorkUnit::new(3079, 3130, vec![w])
            .with_start(vec![start])
            .with_sampling(Sampling { points: vec![3130], ..Sampling::none() });
        let r = sieve_interval(&unit, &table).unwrap();
        let s = r.samples.iter().find(|s| s.x == 3130).unwrap();
        assert_eq!(start.int_value().unwrap() + s.values[0].int_value().unwrap(), -3113);
    }

    #[test]
    fn unsupported_pairing_rejected() {
        let table = build_base_table(1000, TableMode::ParityNMinusOmega).unwrap();
        let unit = WorkUnit::new(1, 100, vec![SumSpec::grosswald()]);
        assert!(matches!(sieve_interval(&unit, &table), Err(Error::UnsupportedPairing { .. })));
        let unit = WorkUnit::new(1, 100, vec![SumSpec::omega_h(0.0).unwrap()]);
        assert!(matches!(sieve_interval(&unit, &table), Err(Error::UnsupportedPairing { .. })));
    }

    #[test]
    fn thin_table_flagged() {
        let table = build_base_table(30, TableMode::OmegaValue).unwrap();
        let unit = WorkUnit::new(5000, 6000, vec![SumSpec::grosswald()]);
        let r = sieve_interval(&unit, &table).unwrap();
        assert!(r.thin_table);
        let want = oracle_sum(&SumSpec::grosswald(), 6000).unwrap().int_value().unwrap()
            - oracle_sum(&SumSpec::grosswald(), 4999).unwrap().int_value().unwrap();
        assert_eq!(r.deltas[0].int_value().unwrap(), want);
    }

    #[test]
    fn every_family_matches_prefix_oracle() {
        let x = 20_000;
        let specs = vec![
            SumSpec::polya(0.0).unwrap(),
            SumSpec::sun(0.0).unwrap(),
            SumSpec::sun(0.25).unwrap(),
            SumSpec::sun(1.0).unwrap(),
            SumSpec::grosswald(),
            SumSpec::twisted(-4).unwrap(),
            SumSpec::twisted(5).unwrap(),
            SumSpec::div_count(7).unwrap(),
        ];
        let table = build_base_table(500, TableMode::OmegaValue).unwrap();
        let pts: Vec<u64> = (1..=x).step_by(97).collect();
        let unit = WorkUnit::new(1, x, specs.clone())
            .with_block_size(1234)
            .with_sampling(Sampling { points: pts, ..Sampling::none() });
        let r = sieve_interval(&unit, &table).unwrap();
        for (k, spec) in specs.iter().enumerate() {
            let want = oracle_prefix_sums(spec, x, ORACLE_LIMIT).unwrap();
            for s in &r.samples {
                let got = s.values[k].value();
                let w = want[s.x as usize - 1].value();
                let err = (got - w).abs().to_f64();
                assert!(err <= 1e-12 * w.abs().to_f64().max(1.0), "{spec} x={} got {got:?} want {w:?}", s.x);
            }
        }
        let h = SumSpec::omega_h(0.75).unwrap();
        let table = build_base_table(500, TableMode::ParityOmegaDistinct).unwrap();
        let r = sieve_interval(&WorkUnit::new(1, x, vec![h]).with_block_size(999), &table).unwrap();
        let want = oracle_sum(&h, x).unwrap().value();
        assert!((r.deltas[0].value() - want).abs().to_f64() < 1e-12);
    }

    #[test]
    fn sampling_points() {
        let s = Sampling { stride: Some(10), u_step: Some(0.5), points: vec![3, 1000], block_ends: false };
        let p = s.points_in(1, 30);
        assert_eq!(p, vec![1, 2, 3, 5, 8, 10, 13, 20, 21, 30]);
    }
}
