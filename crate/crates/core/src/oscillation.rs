//! Admissible kernels and oscillation bounds from weakly independent zero sets.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::dd::{CompensatedSum, Dd};
use crate::error::{Error, Result};
use crate::residues::{h_numerator, s_numerator, Center, ResidueBasis, SumFamily, ZeroNumerator};
use crate::zeros::ZeroSet;

/// Default `N` for the `S` family.
pub const DEFAULT_N_S: u64 = 3100;
/// Default `N` for the `H` family.
pub const DEFAULT_N_H: u64 = 3950;
/// Index of the zero whose ordinate (less `1e-10`) is the default height.
pub const DEFAULT_T_INDEX: usize = 3701;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Fejer,
    JurkatPeyerimhoff,
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fejer" => Ok(KernelKind::Fejer),
            "jp" | "jurkat-peyerimhoff" => Ok(KernelKind::JurkatPeyerimhoff),
            _ => Err(Error::InvalidSpec(format!("unknown kernel {s:?}"))),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Fejer => "fejer",
            KernelKind::JurkatPeyerimhoff => "jp",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub t: f64,
}

impl Kernel {
    pub fn new(kind: KernelKind, t: f64) -> Result<Kernel> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("kernel height {t} must be positive")));
        }
        Ok(Kernel { kind, t })
    }

    pub fn fejer(t: f64) -> Result<Kernel> {
        Kernel::new(KernelKind::Fejer, t)
    }

    pub fn jp(t: f64) -> Result<Kernel> {
        Kernel::new(KernelKind::JurkatPeyerimhoff, t)
    }

    /// `k_T(x)`
    pub fn value(&self, x: f64) -> f64 {
        let r = x.abs() / self.t;
        if r > 1.0 {
            return 0.0;
        }
        match self.kind {
            KernelKind::Fejer => 1.0 - r,
            KernelKind::JurkatPeyerimhoff => {
                let v = (1.0 - r) * (std::f64::consts::PI * r).cos() + (std::f64::consts::PI * r).sin() / std::f64::consts::PI;
                // rounding near |x| = T can dip a hair below zero
                v.max(0.0)
            }
        }
    }
}

pub fn kernel_value(kernel: &Kernel, x: f64) -> f64 {
    kernel.value(x)
}

/// A set of ordinates with per-zero independence bounds `N_gamma`, below height `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceAssumption {
    pub gammas: Vec<Dd>,
    pub n: Vec<u64>,
    pub t: f64,
}

impl IndependenceAssumption {
    pub fn uniform(gammas: Vec<Dd>, n: u64, t: f64) -> Result<Self> {
        let a = IndependenceAssumption { n: vec![n; gammas.len()], gammas, t };
        a.validate()?;
        Ok(a)
    }

    pub fn with_bounds(gammas: Vec<Dd>, n: Vec<u64>, t: f64) -> Result<Self> {
        let a = IndependenceAssumption { gammas, n, t };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.len() != self.n.len() {
            return Err(Error::InvalidSpec("one bound N_gamma is needed per ordinate".into()));
        }
        if self.n.contains(&0) {
            return Err(Error::InvalidSpec("independence bounds must be positive".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| g.to_f64() > self.t) {
            return Err(Error::OrdinateAboveT { gamma: g.to_f64(), t: self.t });
        }
        Ok(())
    }

    /// The smallest `N_gamma`, if any.
    pub fn uniform_n(&self) -> Option<u64> {
        let first = *self.n.first()?;
        self.n.iter().all(|&k| k == first).then_some(first)
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// Read a subset from a file of 1-based indices or decimal ordinates, one per line.
/// Ordinates must match a loaded zero to within `1e-6`.
pub fn load_assumption(path: &Path, zeros: &ZeroSet, n: u64, t: f64) -> Result<IndependenceAssumption> {
    let text = std::fs::read_to_string(path)?;
    parse_assumption(&text, zeros, n, t)
}

pub fn parse_assumption(text: &str, zeros: &ZeroSet, n: u64, t: f64) -> Result<IndependenceAssumption> {
    let mut gammas = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::InvalidSpec(format!("line {}: {line:?} is neither an index nor a loaded ordinate", i + 1));
        let g = if let Ok(k) = line.parse::<usize>() {
            zeros.gamma(k).ok_or_else(bad)?
        } else {
            let want = Dd::parse(line).ok_or_else(bad)?;
            let all = zeros.gammas();
            let k = all.partition_point(|g| *g < want);
            [k.checked_sub(1), Some(k)]
                .into_iter()
                .flatten()
                .filter_map(|j| all.get(j))
                .find(|g| (**g - want).abs().to_f64() < 1e-6)
                .copied()
                .ok_or_else(bad)?
        };
        gammas.push(g);
    }
    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gammas.dedup();
    IndependenceAssumption::uniform(gammas, n, t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundTerm {
    pub gamma: f64,
    pub magnitude: f64,
    pub weight: f64,
    pub factor: f64,
    /// `2 N/(N+1) k_T(gamma) |Res|`
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub family: SumFamily,
    pub alpha: f64,
    pub kernel: Kernel,
    pub center: Center,
    pub amplitude: f64,
    pub liminf_bound: f64,
    pub limsup_bound: f64,
    /// Terms in descending order of contribution.
    pub terms: Vec<BoundTerm>,
    pub uniform_n: Option<u64>,
}

impl BoundReport {
    /// Amplitude with every `N_gamma/(N_gamma+1)` replaced by 1.
    pub fn ingham_limit(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for t in &self.terms {
            acc.add(2.0 * t.weight * t.magnitude);
        }
        acc.value().to_f64()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "gamma,abs_residue,kernel_weight,contribution")?;
        for t in &self.terms {
            writeln!(out, "{:.15},{:.15e},{:.15e},{:.15e}", t.gamma, t.magnitude, t.weight, t.contribution)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let center = match self.center {
            Center::Constant(c) => format!("{c:.9}"),
            Center::Line { slope, intercept } => format!("{slope:.9} u + {intercept:.9}"),
        };
        let n = self.uniform_n.map_or("per-zero".to_string(), |n| n.to_string());
        format!(
            "family {} alpha {} kernel {} T {} N {} zeros {}\ncenter {center}\namplitude {:.10}\nliminf <= {:.10}\nlimsup >= {:.10}\nconditional on the supplied independence assumption\n",
            self.family.name(),
            self.alpha,
            self.kernel.kind,
            self.kernel.t,
            n,
            self.terms.len(),
            self.amplitude,
            self.liminf_bound,
            self.limsup_bound
        )
    }
}

fn numerator_for(basis: Option<&ResidueBasis>, family: SumFamily, gamma: Dd) -> Result<ZeroNumerator> {
    if let Some(b) = basis.filter(|b| b.family == family) {
        let k = b.zeros.partition_point(|z| z.gamma < gamma);
        if let Some(z) = b.zeros.get(k).filter(|z| z.gamma == gamma) {
            return Ok(*z);
        }
    }
    match family {
        SumFamily::S => s_numerator(gamma),
        SumFamily::H => h_numerator(gamma),
    }
}

/// Bounds for the normalized sum, reusing `basis` for any ordinate it covers.
pub fn bounds_with_basis(
    basis: Option<&ResidueBasis>,
    family: SumFamily,
    alpha: f64,
    assumption: &IndependenceAssumption,
    kernel: &Kernel,
) -> Result<BoundReport> {
    assumption.validate()?;
    let mut terms = assumption
        .gammas
        .iter()
        .zip(&assumption.n)
        .map(|(&g, &n)| {
            let r = numerator_for(basis, family, g)?.residue(alpha);
            let weight = kernel.value(r.gamma);
            let factor = n as f64 / (n as f64 + 1.0);
            Ok(BoundTerm { gamma: r.gamma, magnitude: r.magnitude, weight, factor, contribution: 2.0 * factor * weight * r.magnitude })
        })
        .collect::<Result<Vec<_>>>()?;
    terms.sort_by(|a, b| b.contribution.total_cmp(&a.contribution).then(a.gamma.total_cmp(&b.gamma)));
    let mut acc = CompensatedSum::new();
    for t in &terms {
        acc.add(t.contribution);
    }
    let amplitude = acc.value().to_f64();
    let center = match family {
        SumFamily::S => crate::residues::res_f_at_zero(alpha),
        SumFamily::H => Center::Constant(0.0),
    };
    let level = center.level();
    Ok(BoundReport {
        family,
        alpha,
        kernel: *kernel,
        center,
        amplitude,
        liminf_bound: level - amplitude,
        limsup_bound: level + amplitude,
        terms,
        uniform_n: assumption.uniform_n(),
    })
}

pub fn anderson_stark_bounds(
    family: SumFamily,
    alpha: f64,
    assumption: &IndependenceAssumption,
    kernel: &Kernel,
) -> Result<BoundReport> {
    bounds_with_basis(None, family, alpha, assumption, kernel)
}

/// The `count` ordinates below `kernel.t` with the largest `k_T(gamma) |Res|`.
pub fn select_from_basis(basis: &ResidueBasis, alpha: f64, kernel: &Kernel, count: usize, n: u64) -> Result<IndependenceAssumption> {
    let mut ranked: Vec<(f64, Dd)> = basis
        .zeros
        .iter()
        .filter(|z| z.gamma.to_f64() <= kernel.t)
        .map(|z| (kernel.value(z.gamma.to_f64()) * z.residue(alpha).magnitude, z.gamma))
        .collect();
    if count > ranked.len() {
        return Err(Error::InsufficientZeros { needed: count, available: ranked.len() });
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.partial_cmp(&b.1).unwrap()));
    let mut gammas: Vec<Dd> = ranked[..count].iter().map(|r| r.1).collect();
    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    IndependenceAssumption::uniform(gammas, n, kernel.t)
}

pub fn select_zeros_greedy(
    alpha: f64,
    family: SumFamily,
    zeros: &ZeroSet,
    kernel: &Kernel,
    count: usize,
    n: u64,
) -> Result<IndependenceAssumption> {
    let below = zeros.up_to(kernel.t);
    if count > below.len() {
        return Err(Error::InsufficientZeros { needed: count, available: below.len() });
    }
    let basis = ResidueBasis::compute(family, below)?;
    select_from_basis(&basis, alpha, kernel, count, n)
}

/// Default height: `gamma_3701 - 1e-10`.
pub fn default_height(zeros: &ZeroSet) -> Result<f64> {
    zeros
        .gamma(DEFAULT_T_INDEX)
        .map(|g| (g - Dd::from_f64(1e-10)).to_f64())
        .ok_or(Error::InsufficientZeros { needed: DEFAULT_T_INDEX, available: zeros.len() })
}

pub fn default_n(family: SumFamily) -> u64 {
    match family {
        SumFamily::S => DEFAULT_N_S,
        SumFamily::H => DEFAULT_N_H,
    }
}

/// Reference bounds for the adjusted `S_alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremTarget {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub amplitude: Option<f64>,
}

pub fn theorem_targets(alpha: f64) -> Option<TheoremTarget> {
    let (lower, upper, amplitude) = match alpha {
        a if a == 0.0 => (-0.019349, 3.32568, Some(1.6725193)),
        a if a == 0.25 => (1.63369, 4.97900, None),
        a if a == 0.5 => (-3.27438, 0.071048, Some(1.67271899)),
        a if a == 0.75 => (-4.97900, -1.63369, None),
        a if a == 1.0 => (-3.32568, 0.019349, None),
        _ => return None,
    };
    Some(TheoremTarget { alpha, lower, upper, amplitude })
}

/// Reference amplitude for the `H` family at `alpha = 0`.
pub const H_AMPLITUDE_TARGET: f64 = 1.700144;
