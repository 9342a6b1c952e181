//! Acceptance run: one pass/fail line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to fail on the stated
//! claims; the process exits nonzero only when the outcome differs from that.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use oscillax::arith::{oracle_sum, ExactAccumulator, SumSpec};
use oscillax::conjectures::{check_conjectures_with, divisibility_conjectures, divisibility_proportion_run, sun_bounds, Verdict};
use oscillax::euler::{h_of_alpha, h_series_check};
use oscillax::explicit::{Estimator, LiteralAlphaZero};
use oscillax::oscillation::{
    bounds_with_basis, default_height, default_n, select_from_basis, theorem_targets, IndependenceAssumption, Kernel,
    H_AMPLITUDE_TARGET,
};
use oscillax::residues::{f_alpha, res_f_at_zero, s_numerator, h_numerator, Center, ResidueBasis, SumFamily};
use oscillax::run::{execute, write_outputs, RangeRun, RunControl};
use oscillax::sieve::Sampling;
use oscillax::table::build_base_table;
use oscillax::zeros::{load_zeros, ZeroSet};
use oscillax::{dd::CDd, dd::Dd, TableMode};

/// Criteria expected to fail. 7: greedy selection by kernel-weighted residue
/// overshoots the reference S amplitude by 3.1%. 9: S_{-3}(x) > 0 fails from x = 29.
const KNOWN_FAILURES: &[usize] = &[7, 9];

const ORACLE_X: u64 = 1_000_000;
const ORACLE_REL_TOL: f64 = 1e-12;
const SUN_LIMIT: u64 = 100_000_000;
const CENTER_TOL: f64 = 1e-4;
const LINE_TOL: f64 = 1e-5;
const H_TOL: f64 = 1e-5;
const CONTOUR_TOL: f64 = 1e-10;
const MIRROR_TOL: f64 = 1e-12;
const AMPLITUDE_REL_TOL: f64 = 0.03;
const CONJECTURE_LIMIT: u64 = 1_000_000;
const M4_LIMIT: u64 = 4_000_000;
const RESUME_LIMIT: u64 = 10_000_000;

type Check = Result<String, String>;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn zeros_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/zeros5000.txt")
}

fn zeros() -> Result<ZeroSet, String> {
    load_zeros(&zeros_path()).map_err(|e| format!("zero table: {e}"))
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{what} = {got:.10}, expected {want} within {tol:e}"))
}

fn run_to(specs: Vec<SumSpec>, limit: u64, sampling: Sampling) -> Result<oscillax::series::Merged, String> {
    let mode = TableMode::for_specs(&specs).ok_or("no table mode serves these sums")?;
    let table = build_base_table((limit.isqrt() + 1).max(1000), mode).map_err(|e| e.to_string())?;
    let mut cfg = RangeRun::new(specs, limit);
    cfg.sampling = sampling;
    cfg.workers = workers();
    let m = execute(&cfg, &table, &RunControl::default()).map_err(|e| e.to_string())?;
    m.complete().ok_or_else(|| "run interrupted".to_string())
}

fn agrees(a: &ExactAccumulator, b: &ExactAccumulator) -> bool {
    match (a.int_value(), b.int_value()) {
        (Some(x), Some(y)) => x == y,
        _ => {
            let scale = (a.positive_part() + a.negative_part()).to_f64().max(1.0);
            (a.value() - b.value()).to_f64().abs() <= ORACLE_REL_TOL * scale
        }
    }
}

fn sieve_matches_oracle() -> Check {
    let specs = [
        SumSpec::polya(0.0),
        SumSpec::omega_h(0.0),
        SumSpec::sun(0.0),
        SumSpec::sun(0.25),
        SumSpec::sun(0.5),
        SumSpec::sun(0.75),
        SumSpec::sun(1.0),
        SumSpec::omega_h(0.75),
        Ok(SumSpec::grosswald()),
        SumSpec::twisted(-4),
        SumSpec::div_count(3),
    ]
    .into_iter()
    .collect::<oscillax::Result<Vec<_>>>()
    .map_err(|e| e.to_string())?;
    for spec in &specs {
        let sieved = run_to(vec![*spec], ORACLE_X, Sampling::none())?;
        let oracle = oracle_sum(spec, ORACLE_X).map_err(|e| e.to_string())?;
        ensure(
            agrees(&sieved.totals[0], &oracle),
            format!("{} at {ORACLE_X}: sieve {} vs oracle {}", spec.label(), sieved.totals[0].value_f64(), oracle.value_f64()),
        )?;
    }
    Ok(format!("{} sums agree with factor-by-factor evaluation at x = {ORACLE_X}", specs.len()))
}

fn grosswald_values() -> Check {
    let want: [(u64, i128); 4] = [(3130, -3113), (6261, 6195), (6_410_313, 6_316_905), (12_820_626, -12_574_965)];
    let sampling = Sampling { points: want.iter().map(|w| w.0).collect(), ..Sampling::none() };
    let m = run_to(vec![SumSpec::grosswald()], 12_820_626, sampling)?;
    for (x, v) in want {
        let row = m.series.at(x).ok_or(format!("no sample at {x}"))?;
        let got = row.values[0].int_value().ok_or("non-integer W")?;
        ensure(got == v, format!("W({x}) = {got}, expected {v}"))?;
    }
    Ok("W(3130), W(6261), W(6410313), W(12820626) match".into())
}

fn sun_bounds_hold() -> Check {
    let claims = sun_bounds();
    let specs: Vec<SumSpec> = claims.iter().map(|c| c.spec).collect();
    let thresholds =
        claims.iter().enumerate().flat_map(|(i, c)| c.thresholds.iter().map(move |t| t.clone().for_spec(i))).collect();
    let mode = TableMode::for_specs(&specs).ok_or("no table mode")?;
    let table = build_base_table(SUN_LIMIT.isqrt() + 1, mode).map_err(|e| e.to_string())?;
    let mut cfg = RangeRun::new(specs, SUN_LIMIT);
    cfg.sampling = Sampling::none();
    cfg.thresholds = thresholds;
    cfg.workers = workers();
    let m = execute(&cfg, &table, &RunControl::default()).map_err(|e| e.to_string())?.complete().ok_or("interrupted")?;
    for (t, c) in m.thresholds.iter().zip(&m.crossings) {
        if let Some(e) = c.first() {
            return Err(format!("{} violated first at x = {}", t.label(), e.first));
        }
    }
    Ok(format!("{} bounds hold on their ranges up to {SUN_LIMIT}", claims.len()))
}

fn constants() -> Check {
    close("S center at alpha = 0", res_f_at_zero(0.0).level(), 1.6531, CENTER_TOL)?;
    match res_f_at_zero(0.5) {
        Center::Line { slope, intercept } => {
            close("slope", slope, 0.826585, LINE_TOL)?;
            close("intercept", intercept, -1.60167, LINE_TOL)?;
        }
        c => return Err(format!("alpha = 1/2 center is {c:?}, expected a line")),
    }
    let (a, b, c) = h_series_check();
    ensure(
        (a.to_string(), b.to_string(), c.to_string()) == ("-18".into(), "-30".into(), "-56".into()),
        format!("F_6 coefficients {a}, {b}, {c}"),
    )?;
    let h = |x: f64| h_of_alpha(x).map_err(|e| e.to_string());
    ensure(h(1.0)? == 0.0, "h(1) is not 0")?;
    for (x, want) in [(0.55, -0.094719), (0.75, 0.079384), (0.55336, -0.0950579), (0.73587, 0.0804324)] {
        close(&format!("h({x})"), h(x)?, want, H_TOL)?;
    }
    Ok("centers, line, F_6 coefficients and h values match".into())
}

fn zero_counts() -> Check {
    let z = zeros()?;
    let (a, b) = (z.count_up_to(3000.0), z.count_up_to(5200.0));
    ensure(a == 2469 && b == 4734, format!("counts {a} (<= 3000) and {b} (<= 5200), expected 2469 and 4734"))?;
    Ok(format!("{} ordinates, 2469 up to 3000 and 4734 up to 5200", z.len()))
}

/// Residue as a 16-point average of `(s - i gamma) f_alpha(s)` on a small circle.
fn contour_residue(alpha: f64, gamma: Dd) -> Result<CDd, String> {
    let pole = CDd::new(Dd::ZERO, gamma);
    let r = 1e-3;
    let mut acc = CDd::from_f64(0.0, 0.0);
    for k in 0..16 {
        let th = std::f64::consts::TAU * k as f64 / 16.0;
        let d = CDd::from_f64(r * th.cos(), r * th.sin());
        acc += d * f_alpha(alpha, pole + d).map_err(|e| e.to_string())?;
    }
    Ok(acc.scale_f64(1.0 / 16.0))
}

fn residues_check(s_basis: &ResidueBasis) -> Check {
    let z = zeros()?;
    let mut worst: f64 = 0.0;
    for &g in &z.gammas()[..5] {
        let num = s_numerator(g).map_err(|e| e.to_string())?;
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let direct = num.residue(alpha).residue;
            let d = direct - contour_residue(alpha, g)?;
            let err = d.re.to_f64().hypot(d.im.to_f64()) / num.residue(alpha).magnitude;
            worst = worst.max(err);
            let mirror = num.residue(1.0 - alpha).magnitude;
            close("|Res| mirror", num.residue(alpha).magnitude, mirror, MIRROR_TOL * mirror)?;
        }
        h_numerator(g).map_err(|e| e.to_string())?;
    }
    ensure(worst <= CONTOUR_TOL, format!("contour disagreement {worst:e}"))?;
    let t = default_height(&z).map_err(|e| e.to_string())?;
    let kernel = Kernel::jp(t).map_err(|e| e.to_string())?;
    let basis = s_basis.up_to(t);
    let pick = select_from_basis(&basis, 0.0, &kernel, 250, default_n(SumFamily::S)).map_err(|e| e.to_string())?;
    let amps = (0..=10)
        .map(|i| {
            let a = i as f64 / 10.0;
            bounds_with_basis(Some(&basis), SumFamily::S, a, &pick, &kernel).map(|r| (a, r.amplitude))
        })
        .collect::<oscillax::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let best = amps.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    ensure(best.0 == 0.5, format!("amplitude peaks at alpha = {}", best.0))?;
    Ok(format!("contour agreement {worst:.1e}, mirror symmetry, amplitude peaks at 1/2"))
}

fn amplitude_bounds(s_basis: &ResidueBasis, h_basis: &ResidueBasis) -> Check {
    let z = zeros()?;
    let t = default_height(&z).map_err(|e| e.to_string())?;
    let kernel = Kernel::jp(t).map_err(|e| e.to_string())?;
    let s_target = theorem_targets(0.0).and_then(|t| t.amplitude).ok_or("no target")?;
    let (mut notes, mut misses) = (Vec::new(), Vec::new());
    for (family, basis, count, target) in
        [(SumFamily::S, s_basis, 250, s_target), (SumFamily::H, h_basis, 239, H_AMPLITUDE_TARGET)]
    {
        let n = default_n(family);
        let basis = basis.up_to(t);
        let pick = select_from_basis(&basis, 0.0, &kernel, count, n).map_err(|e| e.to_string())?;
        let r = bounds_with_basis(Some(&basis), family, 0.0, &pick, &kernel).map_err(|e| e.to_string())?;
        let level = r.center.level();
        close("bound symmetry", r.limsup_bound - level, level - r.liminf_bound, 1e-12)?;
        let more = IndependenceAssumption::uniform(pick.gammas.clone(), n + 100, t).map_err(|e| e.to_string())?;
        let r2 = bounds_with_basis(Some(&basis), family, 0.0, &more, &kernel).map_err(|e| e.to_string())?;
        ensure(r2.amplitude > r.amplitude, "amplitude does not grow with N")?;
        ensure(r.ingham_limit() > r2.amplitude, "amplitude exceeds its N -> infinity limit")?;
        // the lowest `count` zeros, for comparison with the greedy pick
        let lowest = IndependenceAssumption::uniform(z.gammas()[..count].to_vec(), n, t).map_err(|e| e.to_string())?;
        let r3 = bounds_with_basis(Some(&basis), family, 0.0, &lowest, &kernel).map_err(|e| e.to_string())?;
        let pct = |a: f64| 100.0 * (a - target) / target;
        let note = format!(
            "{} greedy {:.7} ({:+.2}%), lowest {count} {:.7} ({:+.2}%)",
            family.name(),
            r.amplitude,
            pct(r.amplitude),
            r3.amplitude,
            pct(r3.amplitude)
        );
        if (r.amplitude - target).abs() > AMPLITUDE_REL_TOL * target {
            misses.push(note.clone());
        }
        notes.push(note);
    }
    let text = notes.join("; ");
    if misses.is_empty() {
        Ok(text)
    } else {
        Err(format!("greedy amplitude outside 3%: {text}"))
    }
}

fn explicit_estimates(s_basis: &ResidueBasis) -> Check {
    let z = zeros()?;
    let largest = z.largest();
    let scan = |est: &Estimator, lo: f64, hi: f64| -> Vec<(f64, f64)> {
        let k = ((hi - lo) / 1e-5).round() as usize;
        (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).map(|u| (u, est.at(u).normalized)).collect()
    };
    let low = Estimator::from_basis(s_basis, largest, 0.0, 3000.0).map_err(|e| e.to_string())?;
    let dip = scan(&low, 34.18, 34.19).into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    ensure(dip.1 < 1.0, format!("T = 3000 minimum {:.6} at u = {:.5}", dip.1, dip.0))?;
    let high = Estimator::from_basis(s_basis, largest, 0.0, 5200.0).map_err(|e| e.to_string())?;
    let peak = scan(&high, 64.214, 64.215).into_iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    ensure(peak.1 > 2.3, format!("T = 5200 maximum {:.6} at u = {:.6}", peak.1, peak.0))?;
    ensure((peak.0 - 64.21455).abs() < 5e-4, format!("T = 5200 peak at u = {:.6}", peak.0))?;
    let literal = LiteralAlphaZero::new(&z, 500.0).map_err(|e| e.to_string())?;
    let folded = Estimator::from_basis(s_basis, largest, 0.0, 500.0).map_err(|e| e.to_string())?;
    for u in [10.0, 20.5, 34.185] {
        let l = literal.at(u);
        close("literal vs folded", l.re.to_f64(), folded.at(u).normalized, 1e-9)?;
        close("literal imaginary part", l.im.to_f64(), 0.0, 1e-9)?;
    }
    Ok(format!("min {:.4} at u = {:.5} (T = 3000), max {:.4} at u = {:.5} (T = 5200)", dip.1, dip.0, peak.1, peak.0))
}

fn conjectures() -> Check {
    let table = build_base_table(M4_LIMIT.isqrt() + 1, TableMode::OmegaValue).map_err(|e| e.to_string())?;
    let report = check_conjectures_with(&table, CONJECTURE_LIMIT, workers()).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    for c in &report.claims {
        if !c.holds {
            problems.push(format!("{}{}", c.name, c.detail));
        }
    }
    for d in &report.divisibility {
        if let Some(onset) = d.conjecture.onset.filter(|&s| s <= CONJECTURE_LIMIT) {
            if d.observed_onset() != Some(onset) || d.verdict != Verdict::Holds {
                problems.push(format!("m = {}: observed onset {:?}, stated {onset}", d.conjecture.m, d.observed_onset()));
            }
        }
    }
    let m4 = divisibility_conjectures().into_iter().find(|c| c.m == 4).ok_or("no m = 4 conjecture")?;
    let (_, out) = divisibility_proportion_run(m4, M4_LIMIT, &table, Sampling::none()).map_err(|e| e.to_string())?;
    if out.observed_onset() != m4.onset {
        problems.push(format!("m = 4: observed onset {:?}, stated {:?}", out.observed_onset(), m4.onset));
    }
    if problems.is_empty() {
        Ok(format!("all claims hold to {CONJECTURE_LIMIT}; onsets for m = 3, 4, 5, 20 match"))
    } else {
        Err(problems.join("; "))
    }
}

fn resume_is_exact() -> Check {
    let dir = std::env::temp_dir().join(format!("oscillax-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let spec = SumSpec::sun(0.0).map_err(|e| e.to_string())?;
    let table = build_base_table(RESUME_LIMIT.isqrt() + 1, TableMode::ParityNMinusOmega).map_err(|e| e.to_string())?;
    let mut cfg = RangeRun::new(vec![spec], RESUME_LIMIT);
    cfg.block_size = 1_000_000;
    cfg.workers = workers();
    let io = |e: oscillax::Error| e.to_string();
    let clean = execute(&cfg, &table, &RunControl::default()).map_err(io)?.complete().ok_or("interrupted")?;
    let cp = dir.join("checkpoint.txt");
    let stop = RunControl { checkpoint: Some(cp.clone()), resume: false, stop_after_blocks: Some(3) };
    ensure(execute(&cfg, &table, &stop).map_err(io)?.complete().is_none(), "run did not stop")?;
    let again = RunControl { checkpoint: Some(cp), resume: true, stop_after_blocks: None };
    let resumed = execute(&cfg, &table, &again).map_err(io)?.complete().ok_or("interrupted")?;
    let a = write_outputs(&clean, &dir.join("clean")).map_err(io)?;
    let b = write_outputs(&resumed, &dir.join("resumed")).map_err(io)?;
    ensure(a.len() == b.len() && !a.is_empty(), "different output sets")?;
    for (x, y) in a.iter().zip(&b) {
        let (x, y) = (fs::read(x).map_err(|e| e.to_string())?, fs::read(y).map_err(|e| e.to_string())?);
        ensure(x == y, "resumed output differs")?;
    }
    fs::remove_dir_all(&dir).ok();
    Ok(format!("{} output files identical after interrupting at block 3", a.len()))
}

fn main() {
    let started = Instant::now();
    let bases = zeros().and_then(|z| {
        let t = z.largest();
        let all = z.up_to(t);
        let s = ResidueBasis::compute(SumFamily::S, all).map_err(|e| e.to_string())?;
        let ht = default_height(&z).map_err(|e| e.to_string())?;
        let h = ResidueBasis::compute(SumFamily::H, z.up_to(ht)).map_err(|e| e.to_string())?;
        Ok((s, h))
    });
    let with_s = |f: &dyn Fn(&ResidueBasis) -> Check| bases.as_ref().map_err(|e| e.clone()).and_then(|(s, _)| f(s));
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("sieve sums match the oracle", Box::new(sieve_matches_oracle)),
        ("Grosswald values", Box::new(grosswald_values)),
        ("Sun bounds to 1e8", Box::new(sun_bounds_hold)),
        ("analytic constants", Box::new(constants)),
        ("zero table counts", Box::new(zero_counts)),
        ("residues", Box::new(move || with_s(&residues_check))),
        (
            "oscillation amplitudes",
            Box::new(|| bases.as_ref().map_err(|e| e.clone()).and_then(|(s, h)| amplitude_bounds(s, h))),
        ),
        ("explicit-formula estimates", Box::new(move || with_s(&explicit_estimates))),
        ("conjectures to 1e6", Box::new(conjectures)),
        ("interrupted run resumes exactly", Box::new(resume_is_exact)),
    ];
    let mut unexpected = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let k = i + 1;
        let t0 = Instant::now();
        let outcome = check();
        let known = KNOWN_FAILURES.contains(&k);
        let secs = t0.elapsed().as_secs_f64();
        match (&outcome, known) {
            (Ok(msg), false) => println!("PASS {k:>2} {name}: {msg} [{secs:.1}s]"),
            (Err(msg), true) => println!("FAIL {k:>2} {name}: {msg} (known) [{secs:.1}s]"),
            (Ok(msg), true) => {
                unexpected += 1;
                println!("PASS {k:>2} {name}: {msg}; listed as a known failure [{secs:.1}s]");
            }
            (Err(msg), false) => {
                unexpected += 1;
                println!("FAIL {k:>2} {name}: {msg} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance finished in {:.0}s, {unexpected} unexpected outcome(s)", started.elapsed().as_secs_f64());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
