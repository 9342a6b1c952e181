//! Thresholds, extrema, normalization and the deterministic merge of work units.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::arith::{ExactAccumulator, Family, SumSpec};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::sieve::{sieve_interval, BlockResult, WorkUnit};
use crate::table::FactorTable;

/// Which side of a threshold counts as a violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// violated when `value <= c x^p`
    Lower,
    /// violated when `value >= c x^p`
    Upper,
}

/// Exponent of `x` in a threshold `c x^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Power {
    Zero,
    Half,
    One,
    MinusHalf,
}

impl Power {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "0" => Some(Power::Zero),
            "1/2" | "0.5" => Some(Power::Half),
            "1" => Some(Power::One),
            "-1/2" | "-0.5" => Some(Power::MinusHalf),
            _ => None,
        }
    }

    fn text(self) -> &'static str {
        match self {
            Power::Zero => "0",
            Power::Half => "1/2",
            Power::One => "1",
            Power::MinusHalf => "-1/2",
        }
    }
}

/// A bound `c x^p` on one spec's running sum, with `c = num/den` exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Threshold {
    pub spec: usize,
    pub side: Side,
    pub num: i64,
    pub den: i64,
    pub power: Power,
    /// Violations are only recorded for `x >= from`.
    pub from: u64,
}

impl Threshold {
    pub fn new(spec: usize, side: Side, num: i64, den: i64, power: Power) -> Self {
        assert!(den > 0, "threshold denominator must be positive");
        Threshold { spec, side, num, den, power, from: 1 }
    }

    pub fn lower(num: i64, den: i64, power: Power) -> Self {
        Threshold::new(0, Side::Lower, num, den, power)
    }

    pub fn upper(num: i64, den: i64, power: Power) -> Self {
        Threshold::new(0, Side::Upper, num, den, power)
    }

    pub fn for_spec(mut self, spec: usize) -> Self {
        self.spec = spec;
        self
    }

    pub fn starting_at(mut self, from: u64) -> Self {
        self.from = from;
        self
    }

    pub fn coefficient(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `c x^p` in double-double.
    pub fn value_at(&self, x: u64) -> Dd {
        let c = Dd::from_i64(self.num) / Dd::from_i64(self.den);
        let xd = Dd::from_u64(x);
        match self.power {
            Power::Zero => c,
            Power::Half => c * xd.sqrt(),
            Power::One => c * xd,
            Power::MinusHalf => c / xd.sqrt(),
        }
    }

    /// Exact test for an integer sum `v` at `x`.
    pub fn violated_int(&self, x: u64, v: i128) -> bool {
        if x < self.from {
            return false;
        }
        let ord = self.compare_int(x, v);
        match self.side {
            Side::Lower => ord != Ordering::Greater,
            Side::Upper => ord != Ordering::Less,
        }
    }

    /// Ordering of `v` against `c x^p`, exact.
    pub fn compare_int(&self, x: u64, v: i128) -> Ordering {
        let (num, den) = (self.num as i128, self.den as i128);
        let exact = (|| -> Option<Ordering> {
            let l = v.checked_mul(den)?;
            Some(match self.power {
                Power::Zero => l.cmp(&num),
                Power::One => l.cmp(&num.checked_mul(x as i128)?),
                Power::Half => cmp_root(l, num, x)?,
                Power::MinusHalf => cmp_root(num, l, x)?.reverse(),
            })
        })();
        exact.unwrap_or_else(|| {
            Dd::from_i128(v).partial_cmp(&self.value_at(x)).unwrap_or(Ordering::Equal)
        })
    }

    /// Test for a real sum; a double pass decides clear cases and double-double the rest.
    pub fn violated_real(&self, x: u64, v: Dd) -> bool {
        if x < self.from {
            return false;
        }
        let t = self.value_at(x);
        let (vf, tf) = (v.to_f64(), t.to_f64());
        let ord = if (vf - tf).abs() > 1e-12 * (vf.abs() + tf.abs()) {
            vf.partial_cmp(&tf).unwrap_or(Ordering::Equal)
        } else {
            v.partial_cmp(&t).unwrap_or(Ordering::Equal)
        };
        match self.side {
            Side::Lower => ord != Ordering::Greater,
            Side::Upper => ord != Ordering::Less,
        }
    }

    /// The bound after normalizing by the spec's scaling, when the powers match.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

/// Compare `l` with `m * sqrt(x)`; `None` on overflow.
fn cmp_root(l: i128, m: i128, x: u64) -> Option<Ordering> {
    if l >= 0 && m <= 0 {
        return Some(if l == 0 && m == 0 { Ordering::Equal } else { Ordering::Greater });
    }
    if l <= 0 && m >= 0 {
        return Some(Ordering::Less);
    }
    let l2 = l.unsigned_abs().checked_mul(l.unsigned_abs())?;
    let r2 = m.unsigned_abs().checked_mul(m.unsigned_abs())?.checked_mul(x as u128)?;
    let o = l2.cmp(&r2);
    Some(if l > 0 { o } else { o.reverse() })
}

impl fmt::Display for Threshold {
    /// `side:coef[:power][@spec][>=from]`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Lower => "lower",
            Side::Upper => "upper",
        };
        if self.den == 1 {
            write!(f, "{side}:{}:{}", self.num, self.power.text())?;
        } else {
            write!(f, "{side}:{}/{}:{}", self.num, self.den, self.power.text())?;
        }
        if self.spec != 0 {
            write!(f, "@{}", self.spec)?;
        }
        if self.from != 1 {
            write!(f, ">={}", self.from)?;
        }
        Ok(())
    }
}

/// Exact rational from a decimal or `p/q` string.
pub fn parse_rational(s: &str) -> Option<(i64, i64)> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let (p, q): (i64, i64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
        if q == 0 {
            return None;
        }
        return Some(if q < 0 { (-p, -q) } else { (p, q) });
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let digits = format!("{int}{frac}");
    let num: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let g = gcd(num.unsigned_abs(), den as u64) as i64;
    let (num, den) = (num / g.max(1), den / g.max(1));
    Some((if neg { -num } else { num }, den))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("bad threshold {s:?} (want side:coef[:power][@spec][>=from])"));
        let (s2, from) = match s.split_once(">=") {
            Some((a, f)) => (a, f.trim().parse::<u64>().map_err(|_| bad())?),
            None => (s, 1),
        };
        let (s2, spec) = match s2.split_once('@') {
            Some((a, k)) => (a, k.trim().parse::<usize>().map_err(|_| bad())?),
            None => (s2, 0),
        };
        let mut parts = s2.split(':');
        let side = match parts.next().map(str::trim) {
            Some("lower") => Side::Lower,
            Some("upper") => Side::Upper,
            _ => return Err(bad()),
        };
        let (num, den) = parts.next().and_then(parse_rational).ok_or_else(bad)?;
        let power = match parts.next() {
            Some(p) => Power::parse(p.trim()).ok_or_else(bad)?,
            None => Power::Zero,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Threshold { spec, side, num, den, power, from })
    }
}

/// Record value of a normalized sum; ties keep the smallest `x` and count repeats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub x: u64,
    pub value: f64,
    pub ties: u64,
}

/// A maximal run of consecutive integers violating a threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Excursion {
    pub first: u64,
    pub last: u64,
    /// Where the normalized value is most extreme in the violating direction.
    pub extreme_x: u64,
    pub extreme: f64,
    pub count: u64,
}

/// Incremental excursion detection.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTracker {
    pub side: Side,
    pub open: Option<Excursion>,
    pub closed: Vec<Excursion>,
}

impl ThresholdTracker {
    pub fn new(t: &Threshold) -> Self {
        ThresholdTracker { side: t.side, open: None, closed: Vec::new() }
    }

    #[inline]
    pub fn observe_violation(&mut self, x: u64, z: f64) {
        match &mut self.open {
            Some(e) => {
                e.last = x;
                e.count += 1;
                let better = match self.side {
                    Side::Lower => z < e.extreme,
                    Side::Upper => z > e.extreme,
                };
                if better {
                    e.extreme = z;
                    e.extreme_x = x;
                }
            }
            None => self.open = Some(Excursion { first: x, last: x, extreme_x: x, extreme: z, count: 1 }),
        }
    }

    #[inline]
    pub fn observe_ok(&mut self) {
        if let Some(e) = self.open.take() {
            self.closed.push(e);
        }
    }

    pub fn finish(&mut self) -> Vec<Excursion> {
        self.observe_ok();
        std::mem::take(&mut self.closed)
    }
}

/// Additive centering applied before scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Centering {
    None,
    Constant(f64),
    /// `coef * ln x`
    Log(f64),
}

/// `(sum + centering(x)) * x^exponent`
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationRule {
    pub spec: SumSpec,
    pub exponent: f64,
    pub centering: Centering,
}

impl NormalizationRule {
    pub fn for_spec(spec: &SumSpec) -> Result<Self> {
        let a = spec.alpha();
        let mid = a > 0.5 && a < 1.0;
        let (exponent, centering) = match spec.family() {
            Family::PolyaL => {
                let c = if a == 0.5 {
                    Centering::Log(-1.0 / (2.0 * crate::zeta::ZETA_HALF))
                } else if mid {
                    Centering::Constant(-crate::zeta::zeta_real(2.0 * a)? / crate::zeta::zeta_real(a)?)
                } else {
                    Centering::None
                };
                (a - 0.5, c)
            }
            Family::SunS => {
                let c = if a == 0.5 {
                    Centering::Log((1.0 + 2f64.sqrt()) / (2.0 * crate::zeta::ZETA_HALF))
                } else if mid {
                    let z = crate::zeta::zeta_real(2.0 * a)? / crate::zeta::zeta_real(a)?;
                    Centering::Constant((1.0 + 2f64.powf(1.0 - a)) * z)
                } else {
                    Centering::None
                };
                (a - 0.5, c)
            }
            Family::OmegaH => {
                let c = if a > 0.5 { Centering::Constant(-crate::euler::h_of_alpha(a)?) } else { Centering::None };
                (a - 0.5, c)
            }
            Family::GrosswaldW | Family::DivCount(_) => (-1.0, Centering::None),
            Family::TwistedS(_) => (-0.5, Centering::None),
        };
        Ok(NormalizationRule { spec: *spec, exponent, centering })
    }

    pub fn scale(&self, x: u64) -> f64 {
        let xf = x as f64;
        match self.exponent {
            e if e == 0.0 => 1.0,
            e if e == -0.5 => 1.0 / xf.sqrt(),
            e if e == 0.5 => xf.sqrt(),
            e if e == -1.0 => 1.0 / xf,
            e => xf.powf(e),
        }
    }

    pub fn center_term(&self, x: u64) -> f64 {
        match self.centering {
            Centering::None => 0.0,
            Centering::Constant(c) => c,
            Centering::Log(c) => c * (x as f64).ln(),
        }
    }

    #[inline]
    pub fn normalize(&self, x: u64, v: Dd) -> f64 {
        match self.centering {
            Centering::None => v.to_f64() * self.scale(x),
            _ => (v + Dd::from_f64(self.center_term(x))).to_f64() * self.scale(x),
        }
    }
}

/// One merged sample with absolute sums.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub x: u64,
    pub values: Vec<ExactAccumulator>,
}

/// Absolute samples for every spec of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSeries {
    pub specs: Vec<SumSpec>,
    pub rules: Vec<NormalizationRule>,
    pub rows: Vec<SampleRow>,
}

impl SampleSeries {
    pub fn new(specs: Vec<SumSpec>) -> Result<Self> {
        let rules = specs.iter().map(NormalizationRule::for_spec).collect::<Result<_>>()?;
        Ok(SampleSeries { specs, rules, rows: Vec::new() })
    }

    pub fn at(&self, x: u64) -> Option<&SampleRow> {
        self.rows.binary_search_by_key(&x, |r| r.x).ok().map(|i| &self.rows[i])
    }

    pub fn normalized(&self, k: usize, row: &SampleRow) -> f64 {
        self.rules[k].normalize(row.x, row.values[k].value())
    }

    /// `(u, normalized)` pairs for spec `k`.
    pub fn normalized_points(&self, k: usize) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| ((r.x as f64).ln(), self.normalized(k, r))).collect()
    }

    /// CSV `x,u,value_pos,value_neg,normalized` for spec `k`.
    pub fn write_csv<W: Write>(&self, k: usize, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,u,value_pos,value_neg,normalized")?;
        for r in &self.rows {
            let acc = &r.values[k];
            let (p, n) = match acc {
                ExactAccumulator::Int { pos, neg } => (pos.to_string(), neg.to_string()),
                ExactAccumulator::Real { pos, neg } => (format!("{:e}", pos.to_f64()), format!("{:e}", neg.to_f64())),
            };
            writeln!(w, "{},{:.10},{},{},{:.12e}", r.x, (r.x as f64).ln(), p, n, self.normalized(k, r))?;
        }
        Ok(())
    }

    /// Violations of `t` among the sampled points only.
    pub fn sampled_crossings(&self, t: &Threshold) -> Vec<Excursion> {
        let mut tr = ThresholdTracker::new(t);
        for r in &self.rows {
            let acc = &r.values[t.spec];
            let hit = match acc.int_value() {
                Some(v) => t.violated_int(r.x, v),
                None => t.violated_real(r.x, acc.value()),
            };
            if hit {
                tr.observe_violation(r.x, self.normalized(t.spec, r));
            } else {
                tr.observe_ok();
            }
        }
        tr.finish()
    }
}

/// The fold of a tiling of work units.
#[derive(Clone, Debug)]
pub struct Merged {
    pub a: u64,
    pub b: u64,
    pub series: SampleSeries,
    /// Absolute sums at `b`.
    pub totals: Vec<ExactAccumulator>,
    /// Per-spec (max, min) of the normalized value.
    pub extrema: Vec<(Option<Extremum>, Option<Extremum>)>,
    pub thresholds: Vec<Threshold>,
    /// Per-threshold excursions, with exact first and last `x`.
    pub crossings: Vec<Vec<Excursion>>,
    /// Units whose offsets were not known when sieved; they carry the right start now.
    pub pending: Vec<WorkUnit>,
    pub thin_table: bool,
    results: Vec<BlockResult>,
}

impl Merged {
    pub fn is_resolved(&self) -> bool {
        self.pending.is_empty()
    }

    /// Re-sieve pending units with their now-known offsets and merge again.
    pub fn resolve(self, table: &FactorTable) -> Result<Merged> {
        if self.pending.is_empty() {
            return Ok(self);
        }
        let redone = self.pending.par_iter().map(|u| sieve_interval(u, table)).collect::<Result<Vec<_>>>()?;
        let mut results = self.results;
        for r in redone {
            let slot = results.iter_mut().find(|x| x.unit.a == r.unit.a).expect("pending unit present");
            *slot = r;
        }
        let merged = merge_results(&results)?;
        debug_assert!(merged.pending.is_empty());
        Ok(merged)
    }

    /// First violation of threshold `i`, if any.
    pub fn first_crossing(&self, i: usize) -> Option<u64> {
        self.crossings.get(i)?.first().map(|e| e.first)
    }
}

fn offsets_match(a: &[ExactAccumulator], b: &[ExactAccumulator]) -> bool {
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (ExactAccumulator::Int { .. }, ExactAccumulator::Int { .. }) => x == y,
        _ => {
            let d = (x.value() - y.value()).abs().to_f64();
            d <= 1e-24 * x.value().abs().to_f64().max(1.0)
        }
    })
}

fn fold_extremum(slot: &mut Option<Extremum>, e: &Option<Extremum>, want_max: bool) {
    let Some(e) = e else { return };
    match slot {
        None => *slot = Some(*e),
        Some(s) => {
            let better = if want_max { e.value > s.value } else { e.value < s.value };
            if better {
                *s = *e;
            } else if e.value == s.value {
                s.ties += e.ties;
            }
        }
    }
}

fn fold_excursions(acc: &mut Vec<Excursion>, next: &[Excursion], side: Side) {
    for e in next {
        match acc.last_mut() {
            Some(prev) if prev.last + 1 == e.first => {
                prev.last = e.last;
                prev.count += e.count;
                let better = match side {
                    Side::Lower => e.extreme < prev.extreme,
                    Side::Upper => e.extreme > prev.extreme,
                };
                if better {
                    prev.extreme = e.extreme;
                    prev.extreme_x = e.extreme_x;
                }
            }
            _ => acc.push(*e),
        }
    }
}

/// Combine results whose units tile `[a, b]`; input order does not matter.
pub fn merge_results(results: &[BlockResult]) -> Result<Merged> {
    let mut sorted: Vec<BlockResult> = results.to_vec();
    sorted.sort_by_key(|r| r.unit.a);
    let first = sorted.first().ok_or_else(|| Error::Tiling("no results to merge".into()))?;
    let specs = first.unit.specs.clone();
    let thresholds = first.unit.thresholds.clone();
    for r in &sorted {
        if r.unit.specs != specs || r.unit.thresholds != thresholds || r.unit.extrema_from != first.unit.extrema_from {
            return Err(Error::SpecMismatch);
        }
    }
    for w in sorted.windows(2) {
        let (p, q) = (&w[0].unit, &w[1].unit);
        if q.a != p.b + 1 {
            let what = if q.a <= p.b { "overlap" } else { "gap" };
            return Err(Error::Tiling(format!("{what} between [{}, {}] and [{}, {}]", p.a, p.b, q.a, q.b)));
        }
    }
    if !first.unit.offsets_known() {
        return Err(Error::Tiling(format!("first unit starts at {} without offsets", first.unit.a)));
    }

    let mut series = SampleSeries::new(specs.clone())?;
    let mut offsets = first.unit.offsets();
    let mut extrema = vec![(None, None); specs.len()];
    let mut crossings: Vec<Vec<Excursion>> = vec![Vec::new(); thresholds.len()];
    let mut pending = Vec::new();
    let mut thin = false;
    for r in &sorted {
        thin |= r.thin_table;
        let exact = r.unit.offsets_known() && offsets_match(&r.unit.offsets(), &offsets);
        if exact {
            for (k, (mx, mn)) in r.extrema.iter().enumerate() {
                fold_extremum(&mut extrema[k].0, mx, true);
                fold_extremum(&mut extrema[k].1, mn, false);
            }
            for (i, ex) in r.crossings.iter().enumerate() {
                fold_excursions(&mut crossings[i], ex, thresholds[i].side);
            }
        } else {
            pending.push(r.unit.clone().with_start(offsets.clone()));
        }
        for s in &r.samples {
            let values = offsets
                .iter()
                .zip(&s.values)
                .map(|(o, v)| {
                    let mut t = *o;
                    t.merge(v);
                    t
                })
                .collect();
            series.rows.push(SampleRow { x: s.x, values });
        }
        for (o, d) in offsets.iter_mut().zip(&r.deltas) {
            o.merge(d);
        }
    }
    series.rows.dedup_by_key(|r| r.x);
    Ok(Merged {
        a: first.unit.a,
        b: sorted.last().unwrap().unit.b,
        series,
        totals: offsets,
        extrema,
        thresholds,
        crossings,
        pending,
        thin_table: thin,
        results: sorted,
    })
}

/// Sieve `[1, b]` against a single threshold on `spec` and return the excursions.
pub fn find_crossings(table: &FactorTable, spec: SumSpec, threshold: Threshold, b: u64, block_size: u64) -> Result<Vec<Excursion>> {
    let unit = WorkUnit::new(1, b, vec![spec])
        .with_block_size(block_size)
        .with_sampling(crate::sieve::Sampling::none())
        .with_thresholds(vec![threshold.for_spec(0)]);
    let mut r = sieve_interval(&unit, table)?;
    Ok(r.crossings.pop().unwrap_or_default())
}
