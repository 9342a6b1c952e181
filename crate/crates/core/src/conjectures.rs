//! Sun's sign and size conjectures, checked against sieved sums.

use std::fmt::Write as _;

use crate::arith::SumSpec;
use crate::error::Result;
use crate::run::{execute, RangeRun, RunControl};
use crate::series::{Excursion, Merged, Power, Side, Threshold};
use crate::sieve::Sampling;
use crate::table::{build_base_table, isqrt, FactorTable, TableMode};

/// One inequality `spec(x) (>|<) c x^p` claimed for all `x >= from`.
#[derive(Clone, Debug, PartialEq)]
pub struct Claim {
    pub name: String,
    pub spec: SumSpec,
    /// Thresholds whose violation refutes the claim; `spec` indices are filled in on use.
    pub thresholds: Vec<Threshold>,
}

/// Direction of a divisibility conjecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proportion {
    /// more than `x/m` integers `n <= x` have `m | n - Omega(n)`
    Above,
    /// fewer than `x/m`
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DivisibilityConjecture {
    pub m: u32,
    pub direction: Proportion,
    /// Stated onset, when known.
    pub onset: Option<u64>,
}

/// Moduli 3, 4, 5..=18 and 20. Onsets are given for 3, 4, 5 and 20 only.
pub fn divisibility_conjectures() -> Vec<DivisibilityConjecture> {
    let mut v = Vec::new();
    for m in (3..=18).chain([20]) {
        let (direction, onset) = match m {
            3 => (Proportion::Above, Some(62)),
            4 => (Proportion::Below, Some(1_793_193)),
            5 => (Proportion::Above, Some(187)),
            20 => (Proportion::Above, Some(61)),
            _ => (Proportion::Above, None),
        };
        v.push(DivisibilityConjecture { m, direction, onset });
    }
    v
}

impl DivisibilityConjecture {
    pub fn spec(&self) -> SumSpec {
        SumSpec::div_count(self.m).expect("modulus >= 2")
    }

    /// Violation from `from` on, compared exactly as `count * m` against `x`.
    pub fn threshold(&self, from: u64) -> Threshold {
        let t = match self.direction {
            Proportion::Above => Threshold::lower(1, self.m as i64, Power::One),
            Proportion::Below => Threshold::upper(1, self.m as i64, Power::One),
        };
        t.starting_at(from)
    }
}

/// The four bounds on `S_0`, `S_1` and `W`.
pub fn sun_bounds() -> Vec<Claim> {
    let s0 = SumSpec::sun(0.0).unwrap();
    let s1 = SumSpec::sun(1.0).unwrap();
    let w = SumSpec::grosswald();
    vec![
        Claim { name: "S_0(x) > 0 for x >= 5".into(), spec: s0, thresholds: vec![Threshold::lower(0, 1, Power::Zero).starting_at(5)] },
        Claim {
            name: "1 < S_0(x)/sqrt(x) < 2.3 for x >= 325".into(),
            spec: s0,
            thresholds: vec![
                Threshold::lower(1, 1, Power::Half).starting_at(325),
                Threshold::upper(23, 10, Power::Half).starting_at(325),
            ],
        },
        Claim {
            name: "-2.3 < S_1(x) sqrt(x) < -1 for x >= 3".into(),
            spec: s1,
            thresholds: vec![
                Threshold::lower(-23, 10, Power::MinusHalf).starting_at(3),
                Threshold::upper(-1, 1, Power::MinusHalf).starting_at(3),
            ],
        },
        Claim {
            name: "|W(x)| < x for x >= 3078".into(),
            spec: w,
            thresholds: vec![
                Threshold::lower(-1, 1, Power::One).starting_at(3078),
                Threshold::upper(1, 1, Power::One).starting_at(3078),
            ],
        },
    ]
}

/// `S_d(x)` sign claims for `d` in {-4, -7, -3, 5}, from `x >= 11`.
pub fn twisted_signs() -> Vec<Claim> {
    [(-4, Side::Upper), (-7, Side::Upper), (-3, Side::Lower), (5, Side::Lower)]
        .into_iter()
        .map(|(d, side)| {
            let rel = if side == Side::Upper { "<" } else { ">" };
            Claim {
                name: format!("S_{{{d}}}(x) {rel} 0 for x >= 11"),
                spec: SumSpec::twisted(d).unwrap(),
                thresholds: vec![Threshold::new(0, side, 0, 1, Power::Zero).starting_at(11)],
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClaimOutcome {
    pub name: String,
    pub holds: bool,
    pub violations: Vec<Excursion>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisibilityOutcome {
    pub conjecture: DivisibilityConjecture,
    pub limit: u64,
    /// Exact count at the limit.
    pub count: u64,
    /// Violations at or after the stated onset; empty when none is stated.
    pub violations: Vec<Excursion>,
    /// Largest `x <= limit` where the conjectured direction fails, if any.
    pub last_failure: Option<u64>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The stated onset lies beyond the range, or failures persist to its end with no onset stated.
    Undetermined,
}

impl Verdict {
    fn tag(self) -> &'static str {
        match self {
            Verdict::Holds => "ok",
            Verdict::Fails => "FAIL",
            Verdict::Undetermined => "open",
        }
    }
}

impl DivisibilityOutcome {
    /// One past the last failure, when failures stop inside the range.
    pub fn observed_onset(&self) -> Option<u64> {
        match self.last_failure {
            None => Some(1),
            Some(x) if x < self.limit => Some(x + 1),
            Some(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjectureReport {
    pub limit: u64,
    pub claims: Vec<ClaimOutcome>,
    pub divisibility: Vec<DivisibilityOutcome>,
}

impl ConjectureReport {
    pub fn all_hold(&self) -> bool {
        self.claims.iter().all(|c| c.holds) && self.divisibility.iter().all(|d| d.verdict != Verdict::Fails)
    }

    pub fn text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "checked up to x = {}", self.limit);
        for c in &self.claims {
            let _ = writeln!(o, "[{}] {}{}", if c.holds { "ok" } else { "FAIL" }, c.name, c.detail);
        }
        for d in &self.divisibility {
            let c = d.conjecture;
            let rel = if c.direction == Proportion::Above { ">" } else { "<" };
            let onset = match c.onset {
                Some(s) if s > d.limit => format!("stated onset {s} lies beyond the range"),
                Some(s) => format!("stated onset {s}"),
                None => "no stated onset".into(),
            };
            let _ = writeln!(
                o,
                "[{}] proportion with {} | n - Omega(n) {rel} 1/{}: {onset}; last failure {}; observed onset {}",
                d.verdict.tag(),
                c.m,
                c.m,
                d.last_failure.map_or("none".into(), |x| x.to_string()),
                d.observed_onset().map_or("beyond the range".into(), |x| x.to_string())
            );
        }
        o
    }
}

/// Claims plus one spec per divisibility conjecture, all on an `OmegaValue` table.
fn plan(claims: &[Claim], div: &[DivisibilityConjecture]) -> (Vec<SumSpec>, Vec<Threshold>) {
    let mut specs: Vec<SumSpec> = Vec::new();
    let mut thresholds = Vec::new();
    let index = |spec: SumSpec, specs: &mut Vec<SumSpec>| match specs.iter().position(|s| *s == spec) {
        Some(i) => i,
        None => {
            specs.push(spec);
            specs.len() - 1
        }
    };
    for c in claims {
        let i = index(c.spec, &mut specs);
        thresholds.extend(c.thresholds.iter().map(|t| t.clone().for_spec(i)));
    }
    for d in div {
        let i = index(d.spec(), &mut specs);
        thresholds.push(d.threshold(1).for_spec(i));
    }
    (specs, thresholds)
}

fn summarize(claims: &[Claim], div: &[DivisibilityConjecture], m: &Merged, limit: u64) -> ConjectureReport {
    let mut k = 0;
    let mut outcomes = Vec::new();
    for c in claims {
        let mut violations = Vec::new();
        for _ in &c.thresholds {
            violations.extend(m.crossings[k].iter().copied());
            k += 1;
        }
        violations.sort_by_key(|e| e.first);
        let detail = match (violations.first(), violations.last()) {
            (Some(f), Some(l)) => format!(
                ": violated at {} integers, first x = {}, last x = {}",
                violations.iter().map(|e| e.count).sum::<u64>(),
                f.first,
                l.last
            ),
            _ => String::new(),
        };
        outcomes.push(ClaimOutcome { name: c.name.clone(), holds: violations.is_empty(), violations, detail });
    }
    let mut divisibility = Vec::new();
    for d in div {
        let ex = &m.crossings[k];
        let i = m.thresholds[k].spec;
        k += 1;
        // with no stated onset nothing in a finite range refutes the claim
        let violations: Vec<Excursion> = match d.onset {
            Some(from) => ex.iter().filter(|e| e.last >= from).map(|e| Excursion { first: e.first.max(from), ..*e }).collect(),
            None => Vec::new(),
        };
        let last_failure = ex.last().map(|e| e.last);
        let verdict = match d.onset {
            _ if !violations.is_empty() => Verdict::Fails,
            Some(s) if s <= limit => Verdict::Holds,
            None if last_failure.is_none_or(|x| x < limit) => Verdict::Holds,
            _ => Verdict::Undetermined,
        };
        let count = m.totals[i].int_value().unwrap_or(0) as u64;
        divisibility.push(DivisibilityOutcome { conjecture: *d, limit, count, violations, last_failure, verdict });
    }
    ConjectureReport { limit, claims: outcomes, divisibility }
}

/// Check everything on `[1, limit]` with one sieve pass over `table`.
pub fn check_conjectures_with(table: &FactorTable, limit: u64, workers: usize) -> Result<ConjectureReport> {
    let claims: Vec<Claim> = sun_bounds().into_iter().chain(twisted_signs()).collect();
    let div = divisibility_conjectures();
    let (specs, thresholds) = plan(&claims, &div);
    let mut cfg = RangeRun::new(specs, limit);
    cfg.sampling = Sampling::none();
    cfg.thresholds = thresholds;
    cfg.workers = workers;
    cfg.block_size = cfg.block_size.min(limit.max(1));
    let merged = execute(&cfg, table, &RunControl::default())?.complete().expect("uninterrupted run");
    Ok(summarize(&claims, &div, &merged, limit))
}

/// As [`check_conjectures_with`], building the smallest table that covers `limit`.
pub fn check_conjectures(limit: u64, workers: usize) -> Result<ConjectureReport> {
    let table = build_base_table((isqrt(limit) + 1).max(1000), TableMode::OmegaValue)?;
    check_conjectures_with(&table, limit, workers)
}

/// Counts of `n <= x` with `m | n - Omega(n)` at each sample, and failures of the direction.
pub fn divisibility_proportion_run(
    conjecture: DivisibilityConjecture,
    limit: u64,
    table: &FactorTable,
    sampling: Sampling,
) -> Result<(Vec<(u64, u64)>, DivisibilityOutcome)> {
    let spec = conjecture.spec();
    let mut cfg = RangeRun::new(vec![spec], limit);
    cfg.sampling = sampling;
    cfg.thresholds = vec![conjecture.threshold(1)];
    cfg.block_size = cfg.block_size.min(limit.max(1));
    let merged = execute(&cfg, table, &RunControl::default())?.complete().expect("uninterrupted run");
    let counts = merged.series.rows.iter().map(|r| (r.x, r.values[0].int_value().unwrap_or(0) as u64)).collect();
    let report = summarize(&[], &[conjecture], &merged, limit);
    Ok((counts, report.divisibility.into_iter().next().expect("one conjecture")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::oracle_prefix_sums;

    #[test]
    fn seventeen_conjectures() {
        let d = divisibility_conjectures();
        assert_eq!(d.len(), 17);
        assert!(!d.iter().any(|c| c.m == 19));
        assert_eq!(d.iter().filter(|c| c.direction == Proportion::Below).count(), 1);
    }

    #[test]
    fn small_range_against_oracle() {
        let table = build_base_table(1000, TableMode::OmegaValue).unwrap();
        let c = DivisibilityConjecture { m: 2, direction: Proportion::Above, onset: None };
        let sampling = Sampling { stride: Some(1), u_step: None, points: vec![], block_ends: false };
        let (counts, out) = divisibility_proportion_run(c, 100, &table, sampling).unwrap();
        let want = oracle_prefix_sums(&c.spec(), 100, 100).unwrap();
        assert_eq!(counts.len(), 100);
        for (x, n) in counts {
            assert_eq!(n as i128, want[x as usize - 1].int_value().unwrap());
        }
        // brute-force last failure of 2 * count > x
        let last = (1..=100u64).filter(|&x| 2 * want[x as usize - 1].int_value().unwrap() <= x as i128).max();
        assert_eq!(out.last_failure, last);
    }

    #[test]
    fn stated_onsets_at_small_scale() {
        let report = check_conjectures(100_000, 1).unwrap();
        for (m, s) in [(3, 62), (5, 187), (20, 61)] {
            let d = report.divisibility.iter().find(|d| d.conjecture.m == m).unwrap();
            assert_eq!(d.verdict, Verdict::Holds);
            assert_eq!(d.observed_onset(), Some(s), "m={m}");
        }
        let four = report.divisibility.iter().find(|d| d.conjecture.m == 4).unwrap();
        assert_eq!(four.verdict, Verdict::Undetermined);
        // S_{-3} touches zero at 29 and 30, checked by direct summation
        let s3 = report.claims.iter().find(|c| c.name.starts_with("S_{-3}")).unwrap();
        assert_eq!((s3.violations[0].first, s3.violations[0].last), (29, 30));
        let others = report.claims.iter().filter(|c| !c.name.starts_with("S_{-3}"));
        assert!(others.clone().all(|c| c.holds), "{}", report.text());
    }
}
