//! Driving a sieve run over `[1, X]` with per-block checkpoints and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::arith::SumSpec;
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::series::{merge_results, Merged, Threshold};
use crate::sieve::{IntervalRunner, IntervalState, Sampling, WorkUnit, DEFAULT_BLOCK_SIZE};
use crate::table::FactorTable;

#[derive(Clone, Debug, PartialEq)]
pub struct RangeRun {
    pub specs: Vec<SumSpec>,
    pub limit: u64,
    pub block_size: u64,
    pub sampling: Sampling,
    pub thresholds: Vec<Threshold>,
    pub extrema_from: u64,
    pub workers: usize,
}

impl RangeRun {
    pub fn new(specs: Vec<SumSpec>, limit: u64) -> Self {
        RangeRun {
            specs,
            limit,
            block_size: DEFAULT_BLOCK_SIZE,
            sampling: Sampling::default(),
            thresholds: Vec::new(),
            extrema_from: 1,
            workers: 1,
        }
    }

    pub fn unit(&self) -> WorkUnit {
        WorkUnit::new(1, self.limit, self.specs.clone())
            .with_block_size(self.block_size)
            .with_sampling(self.sampling.clone())
            .with_thresholds(self.thresholds.clone())
            .with_extrema_from(self.extrema_from)
    }
}

/// Checkpoint handling for [`execute`].
#[derive(Clone, Debug, Default)]
pub struct RunControl {
    pub checkpoint: Option<PathBuf>,
    pub resume: bool,
    /// Stop (leaving the checkpoint behind) after this many blocks in total.
    pub stop_after_blocks: Option<u64>,
}

#[derive(Debug)]
pub enum RunOutcome {
    Complete(Box<Merged>),
    Interrupted { blocks_done: u64, next: u64 },
}

impl RunOutcome {
    pub fn complete(self) -> Option<Merged> {
        match self {
            RunOutcome::Complete(m) => Some(*m),
            RunOutcome::Interrupted { .. } => None,
        }
    }
}

/// Run `cfg` against `table`, checkpointing after every batch of blocks when asked.
pub fn execute(cfg: &RangeRun, table: &FactorTable, ctl: &RunControl) -> Result<RunOutcome> {
    if cfg.limit == 0 {
        return Err(Error::BadInterval { a: 1, b: 0 });
    }
    let unit = cfg.unit();
    let mut state = IntervalState::new(&unit);
    if ctl.resume {
        if let Some(path) = ctl.checkpoint.as_ref().filter(|p| p.exists()) {
            let cp = Checkpoint::load(path)?;
            if cp.table_fingerprint != table.fingerprint() {
                return Err(Error::Checkpoint("table fingerprint differs from the checkpoint".into()));
            }
            if cp.unit != unit {
                return Err(Error::Checkpoint("run configuration differs from the checkpoint".into()));
            }
            state = cp.state;
        }
    }
    let mut runner = IntervalRunner::with_workers(unit.clone(), table, cfg.workers)?;
    loop {
        if let Some(stop) = ctl.stop_after_blocks {
            if state.blocks_done >= stop && !state.finished(&unit) {
                return Ok(RunOutcome::Interrupted { blocks_done: state.blocks_done, next: state.next });
            }
        }
        if !runner.step(&mut state) {
            break;
        }
        if let Some(path) = &ctl.checkpoint {
            Checkpoint { unit: unit.clone(), state: state.clone(), table_fingerprint: table.fingerprint() }.save(path)?;
        }
    }
    let result = state.into_result(&unit);
    Ok(RunOutcome::Complete(Box::new(merge_results(&[result])?)))
}

fn file_label(spec: &SumSpec) -> String {
    spec.label().replace(['/', '\\'], "_")
}

/// Totals, extrema and excursions as plain text.
pub fn summary_text(m: &Merged) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "range 1..={}", m.b);
    if m.thin_table {
        let _ = writeln!(o, "note: table smaller than sqrt(x) for some blocks");
    }
    for (k, spec) in m.series.specs.iter().enumerate() {
        let t = &m.totals[k];
        let (p, n) = t.to_strings();
        let value = t.int_value().map_or_else(|| t.value().to_string(), |v| v.to_string());
        let _ = writeln!(o, "{spec}: value={value} pos={p} neg={n}");
        for (what, e) in [("max", &m.extrema[k].0), ("min", &m.extrema[k].1)] {
            if let Some(e) = e {
                let _ = writeln!(o, "{spec}: normalized {what} {:.9} at x={} (attained {} times)", e.value, e.x, e.ties);
            }
        }
    }
    for (t, ex) in m.thresholds.iter().zip(&m.crossings) {
        let spec = &m.series.specs[t.spec];
        if ex.is_empty() {
            let _ = writeln!(o, "{spec} {t}: no violations");
        }
        for e in ex {
            let _ = writeln!(
                o,
                "{spec} {t}: violated on [{}, {}] ({} integers), extreme {:.9} at x={}",
                e.first, e.last, e.count, e.extreme, e.extreme_x
            );
        }
    }
    o
}

/// Write `samples_<label>.csv` per spec and `summary.txt` into `dir`.
pub fn write_outputs(m: &Merged, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (k, spec) in m.series.specs.iter().enumerate() {
        let path = dir.join(format!("samples_{}.csv", file_label(spec)));
        let mut buf = Vec::new();
        m.series.write_csv(k, &mut buf)?;
        fs::write(&path, buf)?;
        written.push(path);
    }
    let path = dir.join("summary.txt");
    fs::write(&path, summary_text(m))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::oracle_sum;
    use crate::table::{build_base_table, TableMode};

    #[test]
    fn resume_is_bit_identical() {
        let dir = std::env::temp_dir().join(format!("oscillax-run-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let table = build_base_table(10_000, TableMode::ParityNMinusOmega).unwrap();
        let mut cfg = RangeRun::new(vec![SumSpec::sun(0.0).unwrap(), SumSpec::sun(1.0).unwrap()], 200_000);
        cfg.block_size = 9_999;
        let clean = execute(&cfg, &table, &RunControl::default()).unwrap().complete().unwrap();
        let cp = dir.join("cp.txt");
        let _ = fs::remove_file(&cp);
        let ctl = RunControl { checkpoint: Some(cp.clone()), resume: true, stop_after_blocks: Some(7) };
        assert!(matches!(execute(&cfg, &table, &ctl).unwrap(), RunOutcome::Interrupted { blocks_done: 7, .. }));
        cfg.workers = 3;
        let ctl = RunControl { checkpoint: Some(cp.clone()), resume: true, stop_after_blocks: None };
        let resumed = execute(&cfg, &table, &ctl).unwrap().complete().unwrap();
        assert_eq!(summary_text(&clean), summary_text(&resumed));
        assert_eq!(clean.series, resumed.series);
        assert_eq!(clean.totals[0], oracle_sum(&cfg.specs[0], 200_000).unwrap());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn mismatched_checkpoint_rejected() {
        let dir = std::env::temp_dir().join(format!("oscillax-run2-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let table = build_base_table(1000, TableMode::ParityNMinusOmega).unwrap();
        let mut cfg = RangeRun::new(vec![SumSpec::sun(0.0).unwrap()], 50_000);
        cfg.block_size = 1000;
        let cp = dir.join("cp.txt");
        let ctl = RunControl { checkpoint: Some(cp.clone()), resume: true, stop_after_blocks: Some(3) };
        execute(&cfg, &table, &ctl).unwrap();
        cfg.limit = 60_000;
        let ctl = RunControl { stop_after_blocks: None, ..ctl };
        assert!(matches!(execute(&cfg, &table, &ctl), Err(Error::Checkpoint(_))));
        let other = build_base_table(2000, TableMode::ParityNMinusOmega).unwrap();
        cfg.limit = 50_000;
        assert!(matches!(execute(&cfg, &other, &ctl), Err(Error::Checkpoint(_))));
        fs::remove_dir_all(&dir).unwrap();
    }
}
