//! Residues on the imaginary axis of the Laplace transforms of the normalized sums.
//!
//! For the `S` family the transform has poles at `0` and at `i gamma` with
//! `Res = -(1 + 2^conj(rho)) zeta(2 rho) / ((rho - alpha) zeta'(rho))`; for the `H`
//! family `Res = F_6(rho) / ((rho - alpha) zeta'(rho) Zhat_6(rho))`. Both are an
//! `alpha`-free numerator over `rho - alpha`, which [`ResidueBasis`] exploits.

use rayon::prelude::*;

use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};
use crate::euler::{f6, h_of_alpha, z6_reduced};
use crate::zeta::{zeta, zeta_and_prime, zeta_half_dd, zeta_prime_half_dd};

/// Which transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SumFamily {
    S,
    H,
}

impl SumFamily {
    pub fn name(self) -> &'static str {
        match self {
            SumFamily::S => "S",
            SumFamily::H => "H",
        }
    }
}

/// Below this `|zeta'(rho)|` the ordinate is treated as bad input.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;
/// Above this `|zeta(rho)|` the ordinate is not a zero at all.
pub const ZERO_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidueTerm {
    pub gamma: f64,
    pub residue: CDd,
    pub magnitude: f64,
}

fn rho_of(gamma: Dd) -> CDd {
    CDd::new(Dd::from_f64(0.5), gamma)
}

fn sqrt2() -> Dd {
    Dd::from_f64(2.0).sqrt()
}

/// Center of the `S` family: a constant, or for `alpha = 1/2` the line `slope u + intercept`
/// about which the unadjusted `S_{1/2}(e^u)` oscillates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Center {
    Constant(f64),
    Line { slope: f64, intercept: f64 },
}

impl Center {
    /// The constant part, which is the center of the adjusted sum.
    pub fn level(self) -> f64 {
        match self {
            Center::Constant(c) => c,
            Center::Line { intercept, .. } => intercept,
        }
    }

    pub fn at(self, u: f64) -> f64 {
        match self {
            Center::Constant(c) => c,
            Center::Line { slope, intercept } => slope * u + intercept,
        }
    }
}

/// `Res(F_alpha, 0)`.
pub fn res_f_at_zero(alpha: f64) -> Center {
    let z = zeta_half_dd();
    let one_plus = Dd::ONE + sqrt2();
    if alpha == 0.5 {
        let slope = -(one_plus / (z.mul_f64(2.0)));
        let two_plus = Dd::from_f64(2.0) + sqrt2();
        let inner = Dd::LN2 / two_plus + zeta_prime_half_dd() / z.mul_f64(2.0) - Dd::EULER_GAMMA;
        let intercept = one_plus / z * inner;
        Center::Line { slope: slope.to_f64(), intercept: intercept.to_f64() }
    } else {
        Center::Constant((one_plus / (Dd::from_f64(2.0 * alpha - 1.0) * z)).to_f64())
    }
}

/// Bias of `H_alpha(x)`: zero for `alpha <= 1/2`, `h(alpha)` above.
pub fn res_g_at_zero(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} outside [0, 1]")));
    }
    if alpha <= 0.5 {
        Ok(0.0)
    } else {
        h_of_alpha(alpha)
    }
}

/// `alpha`-independent numerators of the residues at one zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroNumerator {
    pub gamma: Dd,
    pub numerator: CDd,
}

impl ZeroNumerator {
    pub fn rho(&self) -> CDd {
        rho_of(self.gamma)
    }

    pub fn residue(&self, alpha: f64) -> ResidueTerm {
        let residue = self.numerator / (self.rho() - Dd::from_f64(alpha));
        ResidueTerm { gamma: self.gamma.to_f64(), residue, magnitude: residue.abs_f64() }
    }
}

fn zeta_data(gamma: Dd) -> Result<(CDd, CDd)> {
    let rho = rho_of(gamma);
    let (z, dz) = zeta_and_prime(rho)?;
    if z.abs_f64() > ZERO_TOLERANCE {
        return Err(Error::Domain(format!("{} is not a zero ordinate (|zeta| = {:e})", gamma, z.abs_f64())));
    }
    if dz.abs_f64() < DERIVATIVE_FLOOR {
        return Err(Error::DegenerateZero(gamma.to_f64()));
    }
    Ok((rho, dz))
}

/// `-(1 + 2^conj(rho)) zeta(2 rho) / zeta'(rho)`
pub fn s_numerator(gamma: Dd) -> Result<ZeroNumerator> {
    let (rho, dz) = zeta_data(gamma)?;
    let two_conj = rho.conj().exp_scaled(Dd::LN2);
    let num = -((CDd::ONE + two_conj) * zeta(rho.scale_f64(2.0))? / dz);
    Ok(ZeroNumerator { gamma, numerator: num })
}

/// `F_6(rho) / (zeta'(rho) Zhat_6(rho))`
pub fn h_numerator(gamma: Dd) -> Result<ZeroNumerator> {
    let (rho, dz) = zeta_data(gamma)?;
    let (f, _) = f6(rho)?;
    Ok(ZeroNumerator { gamma, numerator: f / (dz * z6_reduced(rho)?) })
}

pub fn res_f_at_gamma(alpha: f64, gamma: Dd) -> Result<ResidueTerm> {
    Ok(s_numerator(gamma)?.residue(alpha))
}

pub fn res_g_at_gamma(alpha: f64, gamma: Dd) -> Result<ResidueTerm> {
    Ok(h_numerator(gamma)?.residue(alpha))
}

/// Numerators for a list of zeros, computed once and reused for every `alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueBasis {
    pub family: SumFamily,
    pub zeros: Vec<ZeroNumerator>,
}

impl ResidueBasis {
    pub fn compute(family: SumFamily, gammas: &[Dd]) -> Result<ResidueBasis> {
        let zeros = gammas
            .par_iter()
            .map(|&g| match family {
                SumFamily::S => s_numerator(g),
                SumFamily::H => h_numerator(g),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResidueBasis { family, zeros })
    }

    pub fn residues(&self, alpha: f64) -> Vec<ResidueTerm> {
        self.zeros.iter().map(|z| z.residue(alpha)).collect()
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Restrict to ordinates `<= t`.
    pub fn up_to(&self, t: f64) -> ResidueBasis {
        let zeros = self.zeros.iter().filter(|z| z.gamma.to_f64() <= t).copied().collect();
        ResidueBasis { family: self.family, zeros }
    }

    /// Center of the normalized sum.
    pub fn center(&self, alpha: f64) -> Result<Center> {
        match self.family {
            SumFamily::S => Ok(res_f_at_zero(alpha)),
            SumFamily::H => Ok(Center::Constant(0.0)),
        }
    }
}

/// `f_alpha(s) = -(1 + 2^{1/2 - s}) zeta(2s + 1) / ((s - alpha + 1/2) zeta(s + 1/2))`
pub fn f_alpha(alpha: f64, s: CDd) -> Result<CDd> {
    let half = Dd::from_f64(0.5);
    let two_pow = (CDd::real(half) - s).exp_scaled(Dd::LN2);
    let num = (CDd::ONE + two_pow) * zeta(s.scale_f64(2.0) + Dd::ONE)?;
    let den = (s - Dd::from_f64(alpha) + half) * zeta(s + half)?;
    Ok(-(num / den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> Dd {
        Dd::parse("14.134725141734693790457251983562").unwrap()
    }

    #[test]
    fn centers() {
        assert!((res_f_at_zero(0.0).level() - 1.6531).abs() < 1e-4);
        assert!((res_f_at_zero(1.0).level() + 1.6531).abs() < 1e-4);
        match res_f_at_zero(0.5) {
            Center::Line { slope, intercept } => {
                assert!((slope - 0.826585).abs() < 1e-5);
                assert!((intercept + 1.60167).abs() < 1e-5);
            }
            _ => panic!("expected a line"),
        }
        assert_eq!(res_g_at_zero(0.3).unwrap(), 0.0);
        assert!((res_g_at_zero(0.75).unwrap() - 0.0793843).abs() < 1e-6);
    }

    #[test]
    fn symmetric_magnitudes() {
        let n = s_numerator(g1()).unwrap();
        for a in [0.0, 0.25] {
            let (p, q) = (n.residue(a).magnitude, n.residue(1.0 - a).magnitude);
            assert!((p - q).abs() < 1e-12 * p);
        }
        let h = h_numerator(g1()).unwrap();
        let (p, q) = (h.residue(0.0).magnitude, h.residue(1.0).magnitude);
        assert!((p - q).abs() < 1e-12 * p);
    }

    #[test]
    fn contour_average_matches() {
        // (1/K) sum r e^{i theta} f(i gamma + r e^{i theta}) recovers the residue
        let g = g1();
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let want = res_f_at_gamma(alpha, g).unwrap().residue;
            let (k, r) = (16, 1e-3);
            let mut acc = CDd::ZERO;
            for j in 0..k {
                let th = Dd::TWO_PI * Dd::from_f64(j as f64 / k as f64);
                let (sn, cs) = th.sin_cos();
                let step = CDd::new(cs, sn).scale_f64(r);
                acc += step * f_alpha(alpha, CDd::new(Dd::ZERO, g) + step).unwrap();
            }
            let got = acc.scale_f64(1.0 / k as f64);
            assert!((got - want).abs_f64() < 1e-10 * want.abs_f64(), "alpha={alpha}");
        }
    }

    #[test]
    fn bad_ordinates() {
        assert!(matches!(res_f_at_gamma(0.0, Dd::from_f64(15.0)), Err(Error::Domain(_))));
    }
}
