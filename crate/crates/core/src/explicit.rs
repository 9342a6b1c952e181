//! Truncated explicit formulas: the normalized sums predicted from zeros up to height `T`.

use std::io::Write;

use rayon::prelude::*;

use crate::dd::{CDd, CompensatedSum, Dd};
use crate::error::{Error, Result};
use crate::residues::{Center, ResidueBasis, SumFamily};
use crate::zeros::ZeroSet;
use crate::zeta::{zeta, zeta_and_prime, zeta_half_dd};

/// Default grid step inside hunt windows.
pub const HUNT_STEP: f64 = 1e-4;
/// Default grid step for surveys.
pub const SURVEY_STEP: f64 = 1e-2;
/// Default refinement tolerance in `u`.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplicitConfig {
    pub family: SumFamily,
    pub alpha: f64,
    pub t: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub du: f64,
    pub tolerance: f64,
}

impl ExplicitConfig {
    pub fn new(family: SumFamily, alpha: f64, t: f64, u_lo: f64, u_hi: f64) -> Self {
        ExplicitConfig { family, alpha, t, u_lo, u_hi, du: HUNT_STEP, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn with_step(mut self, du: f64) -> Self {
        self.du = du;
        self
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.du > 0.0) || !(self.u_hi >= self.u_lo) {
            return Err(Error::Domain(format!("bad grid [{}, {}] step {}", self.u_lo, self.u_hi, self.du)));
        }
        let n = ((self.u_hi - self.u_lo) / self.du + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.u_lo + i as f64 * self.du).collect())
    }
}

/// One oscillating term: `2 Re(residue e^{i gamma u})`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    gamma: Dd,
    re: f64,
    im: f64,
}

/// Reduce `gamma u` modulo `2 pi` in double-double and return `(cos, sin)`.
fn phase(gamma: Dd, u: Dd) -> (f64, f64) {
    let x = gamma * u;
    let k = (x / Dd::TWO_PI).floor();
    let r = (x - k * Dd::TWO_PI).to_f64();
    let (s, c) = r.sin_cos();
    (c, s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimator {
    pub family: SumFamily,
    pub alpha: f64,
    pub t: f64,
    pub center: Center,
    terms: Vec<Term>,
    /// `2 |Res|` of the highest zero used, a rough size for the truncation error.
    pub last_term: f64,
}

impl Estimator {
    /// Use the zeros of `basis` up to `t`; `largest` is the highest ordinate loaded.
    pub fn from_basis(basis: &ResidueBasis, largest: f64, alpha: f64, t: f64) -> Result<Estimator> {
        if t > largest {
            return Err(Error::Domain(format!("truncation height {t} exceeds the largest loaded ordinate {largest}")));
        }
        let terms: Vec<Term> = basis
            .zeros
            .iter()
            .filter(|z| z.gamma.to_f64() <= t)
            .map(|z| {
                let r = z.residue(alpha).residue;
                Term { gamma: z.gamma, re: r.re.to_f64(), im: r.im.to_f64() }
            })
            .collect();
        let last_term = terms.last().map_or(0.0, |t| 2.0 * t.re.hypot(t.im));
        Ok(Estimator { family: basis.family, alpha, t, center: basis.center(alpha)?, terms, last_term })
    }

    pub fn new(zeros: &ZeroSet, family: SumFamily, alpha: f64, t: f64) -> Result<Estimator> {
        if t > zeros.largest() {
            return Err(Error::Domain(format!(
                "truncation height {t} exceeds the largest loaded ordinate {}",
                zeros.largest()
            )));
        }
        let basis = ResidueBasis::compute(family, zeros.up_to(t))?;
        Estimator::from_basis(&basis, zeros.largest(), alpha, t)
    }

    pub fn zero_count(&self) -> usize {
        self.terms.len()
    }

    /// `2 Re sum Res e^{i gamma u}`
    pub fn oscillation(&self, u: f64) -> f64 {
        let ud = Dd::from_f64(u);
        let mut acc = CompensatedSum::new();
        for t in &self.terms {
            let (c, s) = phase(t.gamma, ud);
            acc.add(2.0 * (t.re * c - t.im * s));
        }
        acc.value().to_f64()
    }

    pub fn at(&self, u: f64) -> EstimatePoint {
        let osc = self.oscillation(u);
        EstimatePoint { u, normalized: self.center.level() + osc, raw: self.center.at(u) + osc }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatePoint {
    pub u: f64,
    /// Estimate of the normalized sum.
    pub normalized: f64,
    /// Same, without removing the growing center line at `alpha = 1/2`.
    pub raw: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateCrossing {
    pub threshold: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub u_star: f64,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSeries {
    pub points: Vec<EstimatePoint>,
    pub crossings: Vec<EstimateCrossing>,
}

impl EstimateSeries {
    pub fn min(&self) -> Option<EstimatePoint> {
        self.points.iter().copied().min_by(|a, b| a.normalized.total_cmp(&b.normalized))
    }

    pub fn max(&self) -> Option<EstimatePoint> {
        self.points.iter().copied().max_by(|a, b| a.normalized.total_cmp(&b.normalized))
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "u,estimate")?;
        for p in &self.points {
            writeln!(out, "{:.10},{:.12}", p.u, p.normalized)?;
        }
        Ok(())
    }

    pub fn write_crossings<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "threshold,u_lo,u_hi,u_star")?;
        for c in &self.crossings {
            writeln!(out, "{},{:.10},{:.10},{:.10}", c.threshold, c.u_lo, c.u_hi, c.u_star)?;
        }
        Ok(())
    }
}

pub fn estimate(est: &Estimator, cfg: &ExplicitConfig) -> Result<EstimateSeries> {
    let points = cfg.grid()?.into_par_iter().map(|u| est.at(u)).collect();
    Ok(EstimateSeries { points, crossings: Vec::new() })
}

/// Sign changes of `estimate - threshold` on the grid, refined by bisection.
pub fn find_estimate_crossings(est: &Estimator, series: &EstimateSeries, thresholds: &[f64], tolerance: f64) -> Vec<EstimateCrossing> {
    let mut out = Vec::new();
    for &th in thresholds {
        for w in series.points.windows(2) {
            let (a, b) = (w[0].normalized - th, w[1].normalized - th);
            if (a < 0.0) == (b < 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (w[0].u, w[1].u);
            let below_at_lo = a < 0.0;
            while hi - lo > tolerance {
                let mid = 0.5 * (lo + hi);
                if (est.at(mid).normalized - th < 0.0) == below_at_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let direction = if below_at_lo { Direction::Up } else { Direction::Down };
            out.push(EstimateCrossing { threshold: th, u_lo: lo, u_hi: hi, u_star: 0.5 * (lo + hi), direction });
        }
    }
    out
}

/// Series plus refined crossings.
pub fn estimate_with_crossings(est: &Estimator, cfg: &ExplicitConfig, thresholds: &[f64]) -> Result<EstimateSeries> {
    let mut s = estimate(est, cfg)?;
    s.crossings = find_estimate_crossings(est, &s, thresholds, cfg.tolerance);
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    pub count: usize,
    pub mean: f64,
    pub max: f64,
}

/// Compare the estimate with sieved `(u, normalized)` points inside `[u_lo, u_hi]`.
pub fn compare_to_sieve(est: &Estimator, sieved: &[(f64, f64)], u_lo: f64, u_hi: f64) -> Result<Residuals> {
    let diffs: Vec<f64> = sieved
        .par_iter()
        .filter(|(u, _)| *u >= u_lo && *u <= u_hi)
        .map(|&(u, v)| (est.at(u).normalized - v).abs())
        .collect();
    if diffs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let max = diffs.iter().copied().fold(0.0, f64::max);
    Ok(Residuals { count: diffs.len(), mean: diffs.iter().sum::<f64>() / diffs.len() as f64, max })
}

/// Residuals between two tabulated series on their common `u` values.
pub fn compare_series(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<Residuals> {
    let diffs: Vec<f64> = a
        .iter()
        .filter_map(|&(u, v)| b.iter().find(|p| p.0 == u).map(|p| (p.1 - v).abs()))
        .collect();
    if diffs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let max = diffs.iter().copied().fold(0.0, f64::max);
    Ok(Residuals { count: diffs.len(), mean: diffs.iter().sum::<f64>() / diffs.len() as f64, max })
}

/// Per-zero coefficients `(1 + 2^{1/2 - i gamma}) zeta(2 rho) / (rho zeta'(rho))` for both signs
/// of every ordinate up to `t`, evaluated independently at `rho` and its conjugate.
#[derive(Clone, Debug, PartialEq)]
pub struct LiteralAlphaZero {
    coefficients: Vec<(Dd, CDd)>,
}

impl LiteralAlphaZero {
    pub fn new(zeros: &ZeroSet, t: f64) -> Result<Self> {
        let signed: Vec<Dd> = zeros.up_to(t).iter().flat_map(|&g| [g, -g]).collect();
        let coefficients = signed
            .par_iter()
            .map(|&g| {
                let rho = CDd::new(Dd::from_f64(0.5), g);
                let (_, dz) = zeta_and_prime(rho)?;
                let two = CDd::new(Dd::from_f64(0.5), -g).exp_scaled(Dd::LN2);
                let c = (CDd::ONE + two) * zeta(rho.scale_f64(2.0))? / (rho * dz);
                Ok((g, c))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LiteralAlphaZero { coefficients })
    }

    /// The estimate as a complex number; its imaginary part measures the pairing error.
    pub fn at(&self, u: f64) -> CDd {
        let one_plus = Dd::ONE + Dd::from_f64(2.0).sqrt();
        let center = -(one_plus / zeta_half_dd());
        let ud = Dd::from_f64(u);
        let mut acc = CDd::real(center);
        for &(g, c) in &self.coefficients {
            let (cs, sn) = phase(g, ud);
            acc -= c * CDd::from_f64(cs, sn);
        }
        acc
    }
}
