//! Ordinates of the nontrivial zeros, read from plain text tables.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};
use crate::zeta::zeta;

/// Fewest significant digits accepted per ordinate.
pub const MIN_DIGITS: u32 = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    gammas: Vec<Dd>,
    /// Smallest number of significant digits over all lines.
    pub stated_precision: u32,
    pub source: String,
}

fn significant_digits(s: &str) -> u32 {
    let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.trim_start_matches('0').len() as u32
}

impl ZeroSet {
    /// Parse a table: one ordinate per line, ascending, `#` comments and blank lines allowed.
    pub fn parse(text: &str, source: &str) -> Result<ZeroSet> {
        let mut gammas: Vec<Dd> = Vec::new();
        let mut precision = u32::MAX;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            // tolerate "index ordinate" layouts by taking the last field
            let field = line.split_whitespace().last().unwrap_or(line);
            let g = Dd::parse(field).filter(|g| g.is_finite()).ok_or_else(|| {
                Error::ZerosFormat(format!("line {}: cannot parse {field:?}", i + 1))
            })?;
            let digits = significant_digits(field);
            if digits < MIN_DIGITS {
                return Err(Error::ZerosFormat(format!(
                    "line {}: {field:?} has {digits} significant digits, need at least {MIN_DIGITS}",
                    i + 1
                )));
            }
            if g.hi <= 0.0 {
                return Err(Error::ZerosFormat(format!("line {}: ordinate must be positive", i + 1)));
            }
            if let Some(prev) = gammas.last() {
                if g <= *prev {
                    return Err(Error::ZerosFormat(format!("line {}: ordinates not strictly increasing", i + 1)));
                }
            }
            precision = precision.min(digits);
            gammas.push(g);
        }
        if gammas.is_empty() {
            return Err(Error::ZerosFormat("no ordinates found".into()));
        }
        Ok(ZeroSet { gammas, stated_precision: precision, source: source.to_string() })
    }

    pub fn from_ordinates(gammas: Vec<Dd>, source: &str) -> Result<ZeroSet> {
        if gammas.windows(2).any(|w| w[1] <= w[0]) || gammas.first().is_some_and(|g| g.hi <= 0.0) {
            return Err(Error::ZerosFormat("ordinates must be positive and strictly increasing".into()));
        }
        Ok(ZeroSet { gammas, stated_precision: 31, source: source.to_string() })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas(&self) -> &[Dd] {
        &self.gammas
    }

    /// `gamma_n`, 1-based.
    pub fn gamma(&self, n: usize) -> Option<Dd> {
        n.checked_sub(1).and_then(|i| self.gammas.get(i)).copied()
    }

    /// Ordinates `<= t`.
    pub fn up_to(&self, t: f64) -> &[Dd] {
        let k = self.gammas.partition_point(|g| g.to_f64() <= t);
        &self.gammas[..k]
    }

    pub fn count_up_to(&self, t: f64) -> usize {
        self.up_to(t).len()
    }

    pub fn largest(&self) -> f64 {
        self.gammas.last().map_or(0.0, |g| g.to_f64())
    }

    /// `|zeta(1/2 + i gamma)|` for the first `count` ordinates.
    pub fn residuals(&self, count: usize) -> Result<Vec<f64>> {
        self.gammas[..count.min(self.len())]
            .par_iter()
            .map(|&g| Ok(zeta(CDd::new(Dd::from_f64(0.5), g))?.abs_f64()))
            .collect()
    }

    /// Check `|zeta(1/2 + i gamma)| < tol` for the first `count` ordinates.
    pub fn validate(&self, count: usize, tol: f64) -> Result<()> {
        for (i, r) in self.residuals(count)?.into_iter().enumerate() {
            if r >= tol {
                return Err(Error::ZerosFormat(format!(
                    "gamma_{} = {} is not a zero: |zeta| = {r:e}",
                    i + 1,
                    self.gammas[i]
                )));
            }
        }
        Ok(())
    }
}

pub fn load_zeros(path: &Path) -> Result<ZeroSet> {
    let text = fs::read_to_string(path)?;
    ZeroSet::parse(&text, &path.display().to_string())
}
