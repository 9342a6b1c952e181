use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use oscillax::arith::oracle_sum;
use oscillax::conjectures::{check_conjectures_with, divisibility_conjectures};
use oscillax::explicit::{compare_to_sieve, estimate_with_crossings, Estimator, ExplicitConfig, SURVEY_STEP};
use oscillax::oscillation::{
    bounds_with_basis, default_height, default_n, load_assumption, select_from_basis, Kernel, KernelKind,
};
use oscillax::residues::{ResidueBasis, SumFamily};
use oscillax::run::{execute, summary_text, write_outputs, RangeRun, RunControl, RunOutcome};
use oscillax::series::Threshold;
use oscillax::sieve::{Sampling, DEFAULT_BLOCK_SIZE};
use oscillax::table::build_base_table;
use oscillax::zeros::{load_zeros, ZeroSet};
use oscillax::{FactorTable, SumSpec, TableMode};

#[derive(Parser, Debug)]
#[command(name = "oscillax", version, about = "Weighted Liouville-type sums, zeta zeros and oscillation bounds")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and save a factor table
    Table(TableArgs),
    /// Sieve sums over [1, limit]
    Run(RunArgs),
    /// Oscillation bounds from zeros and an independence assumption
    Bound(BoundArgs),
    /// Truncated explicit-formula estimates and crossing hunts
    Explicit(ExplicitArgs),
    /// Check the sign, size and divisibility conjectures up to a limit
    Conjectures(ConjectureArgs),
    /// Quick internal consistency checks
    Selfcheck(SelfcheckArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Parity,
    ParityOmegaDistinct,
    OmegaValue,
}

impl ModeArg {
    fn core(self) -> TableMode {
        match self {
            ModeArg::Parity => TableMode::ParityNMinusOmega,
            ModeArg::ParityOmegaDistinct => TableMode::ParityOmegaDistinct,
            ModeArg::OmegaValue => TableMode::OmegaValue,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum KernelArg {
    Fejer,
    Jp,
}

impl KernelArg {
    fn core(self) -> KernelKind {
        match self {
            KernelArg::Fejer => KernelKind::Fejer,
            KernelArg::Jp => KernelKind::JurkatPeyerimhoff,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ZeroFamily {
    S,
    H,
}

impl ZeroFamily {
    fn core(self) -> SumFamily {
        match self {
            ZeroFamily::S => SumFamily::S,
            ZeroFamily::H => SumFamily::H,
        }
    }
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Largest n held in the table
    #[arg(long)]
    limit: u64,
    #[arg(long, value_enum, default_value = "parity")]
    mode: ModeArg,
    /// Output file
    #[arg(long)]
    out: PathBuf,
    /// Entries compared with trial division after the build
    #[arg(long, default_value_t = 10_000)]
    verify: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Sum family: L, H, S, W, Sd<d> (twisted, e.g. Sd-4) or D<m> (divisibility count); repeatable
    #[arg(long = "family", required = true)]
    families: Vec<String>,
    /// Exponent for L, H and S families; one value for all or one per family
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
    #[arg(long)]
    limit: u64,
    /// Saved factor table; built in memory when omitted
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    block_size: u64,
    /// Output directory for samples, summary and checkpoint
    #[arg(long, default_value = "oscillax-out")]
    out: PathBuf,
    /// Continue from the checkpoint in the output directory
    #[arg(long)]
    resume: bool,
    /// Threshold `lower|upper:coef[:power][@spec][>=from]`, e.g. `lower:1:1/2@0>=325`; repeatable
    #[arg(long = "threshold")]
    thresholds: Vec<String>,
    /// Step of the log-uniform sample grid (0 disables it)
    #[arg(long, default_value_t = 0.01)]
    du: f64,
    /// Stop after this many blocks, leaving the checkpoint behind
    #[arg(long, hide = true)]
    stop_after_blocks: Option<u64>,
}

#[derive(Args, Debug)]
struct ZeroArgs {
    /// Zero ordinates, one per line
    #[arg(long)]
    zeros: PathBuf,
    #[arg(long, value_enum, default_value = "s")]
    family: ZeroFamily,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    z: ZeroArgs,
    #[arg(long, value_enum, default_value = "jp")]
    kernel: KernelArg,
    /// Independence bound N (default 3100 for S, 3950 for H)
    #[arg(long)]
    big_n: Option<u64>,
    /// Kernel height T (default gamma_3701 - 1e-10)
    #[arg(long)]
    big_t: Option<f64>,
    /// Greedy selection size (default 250 for S, 239 for H)
    #[arg(long)]
    count: Option<usize>,
    /// File of zero indices or ordinates to use instead of greedy selection
    #[arg(long)]
    assumption: Option<PathBuf>,
    /// Also report amplitudes for alpha = 0, step, 2 step, ..., 1 on the same zero set
    #[arg(long)]
    sweep: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExplicitArgs {
    #[command(flatten)]
    z: ZeroArgs,
    /// Truncation height T
    #[arg(long)]
    big_t: f64,
    #[arg(long)]
    u_lo: f64,
    #[arg(long)]
    u_hi: f64,
    #[arg(long, default_value_t = SURVEY_STEP)]
    du: f64,
    /// Level whose crossings are refined; repeatable
    #[arg(long = "threshold")]
    thresholds: Vec<f64>,
    /// Also sieve up to e^u_hi and report residuals against the estimate
    #[arg(long)]
    compare: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConjectureArgs {
    #[arg(long)]
    limit: u64,
    /// Saved omega-value table; built in memory when omitted
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelfcheckArgs {
    /// Also validate the first 100 ordinates of this zero file
    #[arg(long)]
    zeros: Option<PathBuf>,
}

fn parse_specs(families: &[String], alphas: &[f64]) -> Result<Vec<SumSpec>> {
    if alphas.len() > 1 && alphas.len() != families.len() {
        bail!("give one --alpha for all families or one per family");
    }
    families
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let a = alphas.get(i).or(alphas.first()).copied().unwrap_or(0.0);
            let label = match f.as_str() {
                "L" | "H" | "S" => format!("{f}{a}"),
                other => other.to_string(),
            };
            label.parse::<SumSpec>().with_context(|| format!("family {f:?}"))
        })
        .collect()
}

fn table_for(path: Option<&Path>, specs: &[SumSpec], limit: u64) -> Result<FactorTable> {
    let mode = TableMode::for_specs(specs).context("no single table mode serves all requested families")?;
    match path {
        Some(p) => {
            let t = FactorTable::load(p).with_context(|| format!("loading {}", p.display()))?;
            if specs.iter().any(|s| !t.mode().supports(s)) {
                bail!("table {} is {}, which cannot serve the requested families", p.display(), t.mode().name());
            }
            Ok(t)
        }
        None => {
            let root = (limit as f64).sqrt() as u64 + 2;
            Ok(build_base_table(root.max(1000), mode)?)
        }
    }
}

fn cmd_table(a: &TableArgs) -> Result<bool> {
    let mode = a.mode.core();
    if a.out.exists() {
        if let Ok((limit, m)) = FactorTable::peek_header(&a.out) {
            if limit == a.limit && m == mode {
                let t = FactorTable::load(&a.out)?;
                if t.spot_check(a.verify).is_none() {
                    println!("{} already holds this table (fingerprint {:016x}); nothing to do", a.out.display(), t.fingerprint());
                    return Ok(true);
                }
            }
        }
    }
    let start = Instant::now();
    let t = build_base_table(a.limit, mode)?;
    if let Some(n) = t.spot_check(a.verify) {
        bail!("table entry for n = {n} disagrees with trial division");
    }
    t.save(&a.out)?;
    eprintln!("built in {:.1?}", start.elapsed());
    println!(
        "{}: limit {} mode {} entries {} bytes {} fingerprint {:016x}",
        a.out.display(),
        t.limit(),
        t.mode().name(),
        t.entry_count(),
        t.payload_bytes(),
        t.fingerprint()
    );
    Ok(true)
}

fn cmd_run(a: &RunArgs, workers: usize) -> Result<bool> {
    let specs = parse_specs(&a.families, &a.alphas)?;
    let thresholds = a
        .thresholds
        .iter()
        .map(|t| t.parse::<Threshold>().with_context(|| format!("threshold {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    if let Some(t) = thresholds.iter().find(|t| t.spec >= specs.len()) {
        bail!("threshold {t} names spec {} but only {} are given", t.spec, specs.len());
    }
    let table = table_for(a.table.as_deref(), &specs, a.limit)?;
    let mut cfg = RangeRun::new(specs, a.limit);
    cfg.block_size = a.block_size;
    cfg.thresholds = thresholds;
    cfg.workers = workers;
    cfg.sampling = Sampling { u_step: (a.du > 0.0).then_some(a.du), ..Sampling::default() };
    fs::create_dir_all(&a.out)?;
    let ctl = RunControl { checkpoint: Some(a.out.join("checkpoint.txt")), resume: a.resume, stop_after_blocks: a.stop_after_blocks };
    let start = Instant::now();
    match execute(&cfg, &table, &ctl)? {
        RunOutcome::Interrupted { blocks_done, next } => {
            println!("stopped after {blocks_done} blocks; next x = {next}; resume with --resume");
        }
        RunOutcome::Complete(m) => {
            eprintln!("sieved in {:.1?}", start.elapsed());
            write_outputs(&m, &a.out)?;
            print!("{}", summary_text(&m));
        }
    }
    Ok(true)
}

fn load_checked_zeros(path: &Path) -> Result<ZeroSet> {
    let z = load_zeros(path).with_context(|| format!("reading zeros from {}", path.display()))?;
    eprintln!("{} ordinates from {} ({} significant digits)", z.len(), z.source, z.stated_precision);
    Ok(z)
}

fn cmd_bound(a: &BoundArgs) -> Result<bool> {
    let zeros = load_checked_zeros(&a.z.zeros)?;
    let family = a.z.family.core();
    let t = match a.big_t {
        Some(t) => t,
        None => default_height(&zeros)?,
    };
    let kernel = Kernel::new(a.kernel.core(), t)?;
    let n = a.big_n.unwrap_or(default_n(family));
    let basis = ResidueBasis::compute(family, zeros.up_to(t))?;
    let assumption = match &a.assumption {
        Some(p) => load_assumption(p, &zeros, n, t)?,
        None => {
            let count = a.count.unwrap_or(if family == SumFamily::S { 250 } else { 239 });
            select_from_basis(&basis, a.z.alpha, &kernel, count, n)?
        }
    };
    let report = bounds_with_basis(Some(&basis), family, a.z.alpha, &assumption, &kernel)?;
    print!("{}", report.summary());
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let mut f = fs::File::create(dir.join("bound_terms.csv"))?;
        report.write_csv(&mut f)?;
        fs::write(dir.join("bound_summary.txt"), report.summary())?;
    }
    if let Some(step) = a.sweep {
        if !(step > 0.0 && step <= 1.0) {
            bail!("--sweep step must lie in (0, 1]");
        }
        println!("alpha,amplitude");
        let k = (1.0 / step).round() as usize;
        for i in 0..=k {
            let alpha = (i as f64 * step).min(1.0);
            let r = bounds_with_basis(Some(&basis), family, alpha, &assumption, &kernel)?;
            println!("{alpha:.4},{:.10}", r.amplitude);
        }
    }
    Ok(true)
}

fn cmd_explicit(a: &ExplicitArgs, workers: usize) -> Result<bool> {
    let zeros = load_checked_zeros(&a.z.zeros)?;
    let family = a.z.family.core();
    let est = Estimator::new(&zeros, family, a.z.alpha, a.big_t)?;
    let cfg = ExplicitConfig::new(family, a.z.alpha, a.big_t, a.u_lo, a.u_hi).with_step(a.du);
    let series = estimate_with_crossings(&est, &cfg, &a.thresholds)?;
    println!("zeros used {} (last term size {:.3e})", est.zero_count(), est.last_term);
    if let (Some(lo), Some(hi)) = (series.min(), series.max()) {
        println!("min {:.9} at u = {:.6}", lo.normalized, lo.u);
        println!("max {:.9} at u = {:.6}", hi.normalized, hi.u);
    }
    for c in &series.crossings {
        println!("crosses {} at u = {:.7} ({:?})", c.threshold, c.u_star, c.direction);
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        series.write_csv(&mut fs::File::create(dir.join("estimate.csv"))?)?;
        series.write_crossings(&mut fs::File::create(dir.join("crossings.csv"))?)?;
    }
    if a.compare {
        let spec = match family {
            SumFamily::S => SumSpec::sun(a.z.alpha)?,
            SumFamily::H => SumSpec::omega_h(a.z.alpha)?,
        };
        let x = a.u_hi.exp().ceil() as u64;
        let table = table_for(None, &[spec], x)?;
        let mut run = RangeRun::new(vec![spec], x);
        run.workers = workers;
        run.sampling = Sampling { u_step: Some(a.du), block_ends: false, ..Sampling::none() };
        let m = execute(&run, &table, &RunControl::default())?.complete().context("run interrupted")?;
        let r = compare_to_sieve(&est, &m.series.normalized_points(0), a.u_lo, a.u_hi)?;
        println!("sieve comparison: {} points, mean residual {:.4}, max residual {:.4}", r.count, r.mean, r.max);
    }
    Ok(true)
}

fn cmd_conjectures(a: &ConjectureArgs, workers: usize) -> Result<bool> {
    if a.limit == 0 {
        println!("checked up to x = 0: nothing to check");
        return Ok(true);
    }
    let table = match &a.table {
        Some(p) => FactorTable::load(p)?,
        None => build_base_table(((a.limit as f64).sqrt() as u64 + 2).max(1000), TableMode::OmegaValue)?,
    };
    if table.mode() != TableMode::OmegaValue {
        bail!("conjecture checks need an omega-value table");
    }
    let report = check_conjectures_with(&table, a.limit, workers)?;
    print!("{}", report.text());
    eprintln!("{} divisibility conjectures", divisibility_conjectures().len());
    Ok(report.all_hold())
}

fn cmd_selfcheck(a: &SelfcheckArgs, workers: usize) -> Result<bool> {
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        println!("[{}] {name}", if pass { "ok" } else { "FAIL" });
        ok &= pass;
    };
    let specs = parse_specs(
        &["L", "H", "S", "S", "W", "Sd-4", "D3"].map(String::from),
        &[0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
    )?;
    let x = 100_000;
    for spec in &specs {
        let table = table_for(None, &[*spec], x)?;
        let mut run = RangeRun::new(vec![*spec], x);
        run.block_size = 7_919;
        run.workers = workers;
        run.sampling = Sampling::none();
        let m = execute(&run, &table, &RunControl::default())?.complete().context("run interrupted")?;
        let want = oracle_sum(spec, x)?;
        let got = &m.totals[0];
        let pass = match (got.int_value(), want.int_value()) {
            (Some(g), Some(w)) => g == w,
            _ => {
                let (g, w) = (got.value().to_f64(), want.value().to_f64());
                (g - w).abs() <= 1e-12 * w.abs().max(1.0)
            }
        };
        check(&format!("sieve equals direct summation for {spec} at x = {x}"), pass);
    }
    let c = -(1.0 + 2f64.sqrt()) / oscillax::zeta::ZETA_HALF;
    check("-(1 + sqrt 2)/zeta(1/2) = 1.6531...", (c - 1.6531).abs() < 1e-4);
    let h = oscillax::euler::h_of_alpha(0.75)?;
    check("h(3/4) = 0.079384", (h - 0.079384).abs() < 1e-5);
    if let Some(p) = &a.zeros {
        let z = load_checked_zeros(p)?;
        check("first 100 ordinates are zeros of zeta", z.validate(100, 1e-6).is_ok());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let result = match &cli.command {
        Command::Table(a) => cmd_table(a),
        Command::Run(a) => cmd_run(a, workers),
        Command::Bound(a) => cmd_bound(a),
        Command::Explicit(a) => cmd_explicit(a, workers),
        Command::Conjectures(a) => cmd_conjectures(a, workers),
        Command::Selfcheck(a) => cmd_selfcheck(a, workers),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
