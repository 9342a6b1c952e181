//! Line-oriented `key=value` snapshots of a running work unit.
//!
//! Repeated keys form ordered groups: one `family`/`alpha`/`pos`/`neg` group per spec,
//! then extrema, open and closed excursions, and every sample taken so far.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::arith::{ExactAccumulator, Family, SumSpec};
use crate::error::{Error, Result};
use crate::series::{Excursion, Extremum, Threshold, ThresholdTracker};
use crate::sieve::{IntervalState, Sample, Sampling, WorkUnit};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub unit: WorkUnit,
    pub state: IntervalState,
    pub table_fingerprint: u64,
}

fn family_name(f: Family) -> String {
    match f {
        Family::PolyaL => "PolyaL".into(),
        Family::OmegaH => "OmegaH".into(),
        Family::SunS => "SunS".into(),
        Family::GrosswaldW => "GrosswaldW".into(),
        Family::TwistedS(d) => format!("TwistedS({d})"),
        Family::DivCount(m) => format!("DivCount({m})"),
    }
}

fn parse_family(s: &str) -> Option<Family> {
    let arg = |p: &str| s.strip_prefix(p)?.strip_suffix(')').map(str::to_owned);
    Some(match s {
        "PolyaL" => Family::PolyaL,
        "OmegaH" => Family::OmegaH,
        "SunS" => Family::SunS,
        "GrosswaldW" => Family::GrosswaldW,
        _ => {
            if let Some(d) = arg("TwistedS(") {
                Family::TwistedS(d.parse().ok()?)
            } else {
                Family::DivCount(arg("DivCount(")?.parse().ok()?)
            }
        }
    })
}

fn acc_text(a: &ExactAccumulator) -> String {
    let (p, n) = a.to_strings();
    format!("{p}|{n}")
}

fn acc_parse(spec: &SumSpec, s: &str) -> Option<ExactAccumulator> {
    let (p, n) = s.split_once('|')?;
    ExactAccumulator::from_strings(spec, p, n)
}

fn extremum_text(e: &Option<Extremum>) -> String {
    match e {
        Some(e) => format!("{},{:e},{}", e.x, e.value, e.ties),
        None => "none".into(),
    }
}

fn extremum_parse(s: &str) -> Option<Option<Extremum>> {
    if s == "none" {
        return Some(None);
    }
    let mut it = s.split(',');
    let e = Extremum { x: it.next()?.parse().ok()?, value: it.next()?.parse().ok()?, ties: it.next()?.parse().ok()? };
    Some(Some(e))
}

fn excursion_text(e: &Excursion) -> String {
    format!("{},{},{},{:e},{}", e.first, e.last, e.extreme_x, e.extreme, e.count)
}

fn excursion_parse(s: &str) -> Option<Excursion> {
    let mut it = s.split(',');
    Some(Excursion {
        first: it.next()?.parse().ok()?,
        last: it.next()?.parse().ok()?,
        extreme_x: it.next()?.parse().ok()?,
        extreme: it.next()?.parse().ok()?,
        count: it.next()?.parse().ok()?,
    })
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let u = &self.unit;
        let st = &self.state;
        let mut o = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(o, "{k}={v}");
        };
        kv("version", CHECKPOINT_VERSION.to_string());
        kv("table_fingerprint", format!("{:016x}", self.table_fingerprint));
        kv("a", u.a.to_string());
        kv("b", u.b.to_string());
        kv("block_size", u.block_size.to_string());
        kv("last_block", st.blocks_done.to_string());
        kv("next", st.next.to_string());
        kv("extrema_from", u.extrema_from.to_string());
        kv("thin_table", st.thin_table.to_string());
        kv("sample_stride", u.sampling.stride.map_or("none".into(), |s| s.to_string()));
        kv("sample_du", u.sampling.u_step.map_or("none".into(), |d| format!("{d:e}")));
        kv("sample_block_ends", u.sampling.block_ends.to_string());
        kv("sample_points", u.sampling.points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","));
        for (k, spec) in u.specs.iter().enumerate() {
            kv("family", family_name(spec.family()));
            kv("alpha", format!("{}", spec.alpha()));
            let (p, n) = st.running[k].to_strings();
            kv("pos", p);
            kv("neg", n);
            if let Some(start) = &u.start {
                kv("start", acc_text(&start[k]));
            }
            kv("max", extremum_text(&st.extrema[k].0));
            kv("min", extremum_text(&st.extrema[k].1));
        }
        for (t, tr) in u.thresholds.iter().zip(&st.trackers) {
            kv("threshold", t.to_string());
            if let Some(e) = &tr.open {
                kv("open", excursion_text(e));
            }
            for e in &tr.closed {
                kv("closed", excursion_text(e));
            }
        }
        for s in &st.samples {
            let vals: Vec<String> = s.values.iter().map(acc_text).collect();
            kv("sample", format!("{};{}", s.x, vals.join(";")));
        }
        o
    }

    pub fn parse(text: &str) -> Result<Checkpoint> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(&format!("line {} is not key=value", i + 1)))?;
            lines.push((k.trim(), v.trim()));
        }
        let mut it = lines.into_iter().peekable();
        let mut next_kv = |want: &str| -> Result<&str> {
            match it.next() {
                Some((k, v)) if k == want => Ok(v),
                Some((k, _)) => Err(bad(&format!("expected {want}, found {k}"))),
                None => Err(bad(&format!("missing {want}"))),
            }
        };
        let num = |v: &str, what: &str| v.parse::<u64>().map_err(|_| bad(&format!("bad {what}")));
        let version = num(next_kv("version")?, "version")?;
        if version != CHECKPOINT_VERSION as u64 {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let fp = u64::from_str_radix(next_kv("table_fingerprint")?, 16).map_err(|_| bad("bad fingerprint"))?;
        let a = num(next_kv("a")?, "a")?;
        let b = num(next_kv("b")?, "b")?;
        let block_size = num(next_kv("block_size")?, "block_size")?;
        let blocks_done = num(next_kv("last_block")?, "last_block")?;
        let next = num(next_kv("next")?, "next")?;
        let extrema_from = num(next_kv("extrema_from")?, "extrema_from")?;
        let thin_table = next_kv("thin_table")? == "true";
        let stride = match next_kv("sample_stride")? {
            "none" => None,
            v => Some(num(v, "sample_stride")?),
        };
        let u_step = match next_kv("sample_du")? {
            "none" => None,
            v => Some(v.parse::<f64>().map_err(|_| bad("bad sample_du"))?),
        };
        let block_ends = next_kv("sample_block_ends")? == "true";
        let pts = next_kv("sample_points")?;
        let points = if pts.is_empty() {
            Vec::new()
        } else {
            pts.split(',').map(|p| num(p, "sample point")).collect::<Result<_>>()?
        };
        drop(next_kv);

        let mut specs = Vec::new();
        let mut running = Vec::new();
        let mut starts = Vec::new();
        let mut extrema = Vec::new();
        let mut thresholds: Vec<Threshold> = Vec::new();
        let mut trackers: Vec<ThresholdTracker> = Vec::new();
        let mut samples = Vec::new();
        let mut rest: Vec<(&str, &str)> = it.collect();
        rest.reverse();
        while let Some((k, v)) = rest.pop() {
            match k {
                "family" => {
                    let fam = parse_family(v).ok_or_else(|| bad("bad family"))?;
                    let (_, al) = rest.pop().filter(|(k, _)| *k == "alpha").ok_or_else(|| bad("missing alpha"))?;
                    let spec = SumSpec::new(fam, al.parse().map_err(|_| bad("bad alpha"))?)?;
                    let (_, p) = rest.pop().filter(|(k, _)| *k == "pos").ok_or_else(|| bad("missing pos"))?;
                    let (_, n) = rest.pop().filter(|(k, _)| *k == "neg").ok_or_else(|| bad("missing neg"))?;
                    running.push(ExactAccumulator::from_strings(&spec, p, n).ok_or_else(|| bad("bad accumulator"))?);
                    if rest.last().is_some_and(|(k, _)| *k == "start") {
                        let (_, s) = rest.pop().unwrap();
                        starts.push(acc_parse(&spec, s).ok_or_else(|| bad("bad start"))?);
                    }
                    let (_, mx) = rest.pop().filter(|(k, _)| *k == "max").ok_or_else(|| bad("missing max"))?;
                    let (_, mn) = rest.pop().filter(|(k, _)| *k == "min").ok_or_else(|| bad("missing min"))?;
                    extrema.push((
                        extremum_parse(mx).ok_or_else(|| bad("bad max"))?,
                        extremum_parse(mn).ok_or_else(|| bad("bad min"))?,
                    ));
                    specs.push(spec);
                }
                "threshold" => {
                    let t: Threshold = v.parse()?;
                    trackers.push(ThresholdTracker::new(&t));
                    thresholds.push(t);
                }
                "open" | "closed" => {
                    let tr = trackers.last_mut().ok_or_else(|| bad("excursion before threshold"))?;
                    let e = excursion_parse(v).ok_or_else(|| bad("bad excursion"))?;
                    if k == "open" {
                        tr.open = Some(e);
                    } else {
                        tr.closed.push(e);
                    }
                }
                "sample" => {
                    let mut parts = v.split(';');
                    let x = num(parts.next().unwrap_or(""), "sample x")?;
                    let values = parts
                        .zip(&specs)
                        .map(|(p, s)| acc_parse(s, p).ok_or_else(|| bad("bad sample value")))
                        .collect::<Result<Vec<_>>>()?;
                    if values.len() != specs.len() {
                        return Err(bad("sample has wrong arity"));
                    }
                    samples.push(Sample { x, values });
                }
                other => return Err(bad(&format!("unexpected key {other}"))),
            }
        }
        if specs.is_empty() {
            return Err(bad("no specs"));
        }
        let start = if starts.is_empty() {
            None
        } else if starts.len() == specs.len() {
            Some(starts)
        } else {
            return Err(bad("partial start offsets"));
        };
        let unit = WorkUnit {
            a,
            b,
            block_size,
            specs,
            sampling: Sampling { stride, u_step, points, block_ends },
            thresholds,
            extrema_from,
            start,
        };
        let state = IntervalState { next, running, samples, extrema, trackers, blocks_done, thin_table };
        Ok(Checkpoint { unit, state, table_fingerprint: fp })
    }

    /// Write through a temporary file and rename, so a kill never leaves a torn checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_text())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::parse(&fs::read_to_string(path)?)
    }
}
