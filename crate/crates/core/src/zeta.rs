//! `zeta(s)` and `zeta'(s)` by Euler–Maclaurin summation in double-double complex arithmetic.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};

pub const ZETA_HALF: f64 = -1.4603545088095868;
pub const ZETA_PRIME_HALF: f64 = -3.9226461392091517;

pub fn zeta_half_dd() -> Dd {
    Dd::parse("-1.46035450880958681288949915251529801").unwrap()
}

pub fn zeta_prime_half_dd() -> Dd {
    Dd::parse("-3.92264613920915172747153144671459951").unwrap()
}

/// Bernoulli correction terms available.
pub const MAX_BERNOULLI_TERMS: usize = 30;

/// Target number of correct decimal digits, overridable via `OSCILLAX_PRECISION`.
pub fn precision_digits() -> u32 {
    static DIGITS: OnceLock<u32> = OnceLock::new();
    *DIGITS.get_or_init(|| {
        std::env::var("OSCILLAX_PRECISION")
            .ok()
            .and_then(|v| v.trim().parse::<u32>().ok())
            .map(|d| d.clamp(6, 31))
            .unwrap_or(26)
    })
}

/// Exact Bernoulli numbers `B_0..=B_n`.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        // sum_{j<=m} C(m+1, j) B_j = 0
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

pub(crate) fn big_to_dd(x: &BigInt) -> Dd {
    let hi = x.to_f64().unwrap_or(f64::NAN);
    if !hi.is_finite() {
        return Dd::from_f64(hi);
    }
    let rest = x - float_to_big(hi);
    Dd::from_f64(hi) + Dd::from_f64(rest.to_f64().unwrap_or(0.0))
}

fn float_to_big(x: f64) -> BigInt {
    use num_traits::FromPrimitive;
    BigInt::from_f64(x).unwrap_or_default()
}

pub(crate) fn rational_to_dd(r: &BigRational) -> Dd {
    big_to_dd(r.numer()) / big_to_dd(r.denom())
}

/// `B_{2k} / (2k)!` for `k = 1..=MAX_BERNOULLI_TERMS`.
fn em_coefficients() -> &'static [Dd] {
    static C: OnceLock<Vec<Dd>> = OnceLock::new();
    C.get_or_init(|| {
        let b = bernoulli_numbers(2 * MAX_BERNOULLI_TERMS);
        let mut fact = BigInt::one();
        let mut out = Vec::new();
        for m in 1..=2 * MAX_BERNOULLI_TERMS {
            fact *= BigInt::from(m);
            if m % 2 == 0 {
                out.push(rational_to_dd(&(b[m].clone() / BigRational::from_integer(fact.clone()))));
            }
        }
        out
    })
}

/// `B_{2k} / (2k (2k-1))` for Stirling's series.
fn stirling_coefficients() -> &'static [Dd] {
    static C: OnceLock<Vec<Dd>> = OnceLock::new();
    C.get_or_init(|| {
        let b = bernoulli_numbers(2 * MAX_BERNOULLI_TERMS);
        (1..=MAX_BERNOULLI_TERMS)
            .map(|k| {
                let d = BigInt::from(2 * k) * BigInt::from(2 * k - 1);
                rational_to_dd(&(b[2 * k].clone() / BigRational::from_integer(d)))
            })
            .collect()
    })
}

const TABLE_SIZE: usize = 1 << 17;

/// Smallest prime factor and `ln n` for `n < TABLE_SIZE`.
struct SmallTables {
    spf: Vec<u32>,
    ln: Vec<Dd>,
}

fn tables() -> &'static SmallTables {
    static T: OnceLock<SmallTables> = OnceLock::new();
    T.get_or_init(|| {
        let mut spf = vec![0u32; TABLE_SIZE];
        for i in 2..TABLE_SIZE {
            if spf[i] == 0 {
                let mut j = i;
                while j < TABLE_SIZE {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        let mut ln = vec![Dd::ZERO; TABLE_SIZE];
        for n in 2..TABLE_SIZE {
            let p = spf[n] as usize;
            ln[n] = if p == n { Dd::from_u64(n as u64).ln() } else { ln[p] + ln[n / p] };
        }
        SmallTables { spf, ln }
    })
}

fn ln_u64(n: u64) -> Dd {
    if (n as usize) < TABLE_SIZE {
        tables().ln[n as usize]
    } else {
        Dd::from_u64(n).ln()
    }
}

/// Node count for Euler–Maclaurin at `s`.
pub fn default_nodes(s: CDd) -> usize {
    let t = s.im.to_f64().abs();
    let sig = s.re.to_f64();
    let n = (10.0 + 1.3 * t).ceil().max(20.0).max(2.0 - sig + 20.0);
    n as usize
}

/// Euler–Maclaurin with `n` nodes; returns `(zeta, zeta')` and the size of the last correction used.
pub fn euler_maclaurin(s: CDd, n: usize, digits: u32) -> Result<(CDd, CDd, f64)> {
    if s.re == Dd::ONE && s.im == Dd::ZERO {
        return Err(Error::Pole);
    }
    let eps = 10f64.powi(-(digits as i32));
    let n = n.max(2);
    let neg_s = -s;

    // m^-s for m < n via complete multiplicativity
    let mut sum = CDd::ONE;
    let mut dsum = CDd::ZERO;
    if n <= TABLE_SIZE {
        let t = tables();
        let mut pw = vec![CDd::ZERO; n];
        if n > 1 {
            pw[1] = CDd::ONE;
        }
        for m in 2..n {
            let p = t.spf[m] as usize;
            pw[m] = if p == m { neg_s.exp_scaled(t.ln[m]) } else { pw[p] * pw[m / p] };
            sum += pw[m];
            dsum -= pw[m].scale(t.ln[m]);
        }
    } else {
        for m in 2..n as u64 {
            let l = ln_u64(m);
            let v = neg_s.exp_scaled(l);
            sum += v;
            dsum -= v.scale(l);
        }
    }

    let ln_n = ln_u64(n as u64);
    let nd = Dd::from_u64(n as u64);
    let ns = neg_s.exp_scaled(ln_n); // n^-s
    let sm1 = s - Dd::ONE;
    let inv_sm1 = sm1.recip();
    let tail = ns.scale(nd) * inv_sm1; // n^{1-s}/(s-1)
    sum += tail;
    dsum -= tail.scale(ln_n) + tail * inv_sm1;
    let half = ns.scale_f64(0.5);
    sum += half;
    dsum -= half.scale(ln_n);

    let coef = em_coefficients();
    let inv_n = nd.recip();
    let inv_n2 = inv_n * inv_n;
    let mut npow = ns.scale(inv_n); // n^{-s-1}
    let mut p = s; // s (s+1) ... (s+2k-2)
    let mut dp = CDd::ONE;
    let mut last = f64::INFINITY;
    let scale = sum.abs_f64().max(1e-300);
    for (k0, c) in coef.iter().enumerate() {
        let k = k0 + 1;
        let term = (p * npow).scale(*c);
        let dterm = ((dp - p.scale(ln_n)) * npow).scale(*c);
        sum += term;
        dsum += dterm;
        last = term.abs_f64().max(dterm.abs_f64());
        if k >= 2 && last < eps * scale * 1e-3 {
            break;
        }
        let a = s + Dd::from_u64(2 * k as u64 - 1);
        let b = s + Dd::from_u64(2 * k as u64);
        let q = a * b;
        let dq = (s.scale_f64(2.0)) + Dd::from_u64(4 * k as u64 - 1);
        dp = dp * q + p * dq;
        p *= q;
        npow = npow.scale(inv_n2);
    }
    Ok((sum, dsum, last))
}

/// `zeta(s)` and `zeta'(s)` together.
pub fn zeta_and_prime(s: CDd) -> Result<(CDd, CDd)> {
    let (z, d, _) = euler_maclaurin(s, default_nodes(s), precision_digits())?;
    Ok((z, d))
}

pub fn zeta(s: CDd) -> Result<CDd> {
    Ok(zeta_and_prime(s)?.0)
}

pub fn zeta_prime(s: CDd) -> Result<CDd> {
    Ok(zeta_and_prime(s)?.1)
}

/// `zeta(s)` for real `s`.
pub fn zeta_real(s: f64) -> Result<f64> {
    Ok(zeta(CDd::from_f64(s, 0.0))?.re.to_f64())
}

/// `|zeta(s; N) - zeta(s; 2N)|`, a practical error gauge.
pub fn doubled_node_gap(s: CDd) -> Result<f64> {
    let n = default_nodes(s);
    let a = euler_maclaurin(s, n, precision_digits())?.0;
    let b = euler_maclaurin(s, 2 * n, precision_digits())?.0;
    Ok((a - b).abs_f64())
}

/// `Gamma(z)` for complex `z` away from the poles.
pub fn gamma(z: CDd) -> CDd {
    // shift so Stirling converges quickly
    let target = 25.0 + 0.5 * z.im.to_f64().abs().min(50.0);
    let mut shift = CDd::ONE;
    let mut w = z;
    while w.re.to_f64() < target {
        shift *= w;
        w = w + Dd::ONE;
    }
    ln_gamma_stirling(w).exp() / shift
}

fn ln_gamma_stirling(w: CDd) -> CDd {
    let lw = w.ln();
    let mut acc = (w - Dd::from_f64(0.5)) * lw - w + Dd::LN_2PI.mul_f64(0.5);
    let inv = w.recip();
    let inv2 = inv * inv;
    let mut pw = inv;
    for c in stirling_coefficients().iter().take(20) {
        acc += pw.scale(*c);
        pw *= inv2;
    }
    acc
}

/// `sin z`
pub fn csin(z: CDd) -> CDd {
    let (s, c) = z.re.sin_cos();
    let e = z.im.exp();
    let ei = e.recip();
    let cosh = (e + ei).mul_f64(0.5);
    let sinh = (e - ei).mul_f64(0.5);
    CDd::new(s * cosh, c * sinh)
}

/// The factor in `zeta(s) = chi(s) zeta(1 - s)`.
pub fn chi(s: CDd) -> CDd {
    let two_s = s.exp_scaled(Dd::LN2);
    let pi_s1 = (s - Dd::ONE).exp_scaled(Dd::PI.ln());
    let sin = csin(s.scale(Dd::HALF_PI));
    two_s * pi_s1 * sin * gamma(CDd::ONE - s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: CDd, b: CDd) -> f64 {
        (a - b).abs_f64() / b.abs_f64().max(1e-300)
    }

    #[test]
    fn bernoulli_small() {
        let b = bernoulli_numbers(12);
        let s: Vec<String> = b.iter().map(|r| r.to_string()).collect();
        assert_eq!(&s[..9], &["1", "-1/2", "1/6", "0", "-1/30", "0", "1/42", "0", "-1/30"]);
        assert_eq!(s[12], "-691/2730");
    }

    #[test]
    fn classical_values() {
        let z2 = zeta(CDd::from_f64(2.0, 0.0)).unwrap();
        assert!(rel(z2, CDd::real(Dd::PI * Dd::PI / Dd::from_f64(6.0))) < 1e-26);
        let z0 = zeta(CDd::ZERO).unwrap();
        assert!((z0.re + Dd::from_f64(0.5)).abs().to_f64() < 1e-28);
        let zh = zeta(CDd::from_f64(0.5, 0.0)).unwrap();
        assert!((zh.re - zeta_half_dd()).abs().to_f64() < 1e-26);
        let zm1 = zeta(CDd::from_f64(-1.0, 0.0)).unwrap();
        assert!((zm1.re + Dd::ONE / Dd::from_f64(12.0)).abs().to_f64() < 1e-26);
        let z4 = zeta(CDd::from_f64(4.0, 0.0)).unwrap();
        assert!(rel(z4, CDd::real(Dd::PI.powi(4) / Dd::from_f64(90.0))) < 1e-26);
    }

    #[test]
    fn derivative_values() {
        let d = zeta_prime(CDd::from_f64(0.5, 0.0)).unwrap();
        assert!((d.re - zeta_prime_half_dd()).abs().to_f64() < 1e-25);
        let d0 = zeta_prime(CDd::ZERO).unwrap();
        assert!((d0.re + Dd::LN_2PI.mul_f64(0.5)).abs().to_f64() < 1e-27);
        // -sum ln n / n^2 by direct summation with an integral tail
        let mut direct = Dd::ZERO;
        let m = 200_000u64;
        for n in 2..=m {
            direct -= Dd::from_u64(n).ln() / Dd::from_u64(n * n);
        }
        let mf = m as f64 + 0.5;
        direct -= Dd::from_f64((mf.ln() + 1.0) / mf);
        let d2 = zeta_prime(CDd::from_f64(2.0, 0.0)).unwrap();
        assert!((d2.re - direct).abs().to_f64() < 1e-9, "{d2} vs {direct}");
        assert!((d2.re.to_f64() + 0.93754825431584375).abs() < 1e-15);
    }

    #[test]
    fn pole_rejected() {
        assert!(matches!(zeta(CDd::ONE), Err(Error::Pole)));
    }

    #[test]
    fn first_zero_and_derivative_difference() {
        let g = Dd::parse("14.134725141734693790457251983562").unwrap();
        let rho = CDd::new(Dd::from_f64(0.5), g);
        let (z, d) = zeta_and_prime(rho).unwrap();
        assert!(z.abs_f64() < 1e-25, "{z}");
        let h = 1e-8;
        let zp = zeta(rho + CDd::from_f64(h, 0.0)).unwrap();
        let zm = zeta(rho - CDd::from_f64(h, 0.0)).unwrap();
        let cd = (zp - zm).scale_f64(0.5 / h);
        assert!(rel(cd, d) < 1e-12);
    }

    #[test]
    fn large_height_is_stable() {
        let s = CDd::from_f64(0.3, 9876.5);
        assert!(doubled_node_gap(s).unwrap() < 1e-20 * zeta(s).unwrap().abs_f64().max(1e-3));
        let s = CDd::from_f64(3.0, 31000.0);
        assert!(doubled_node_gap(s).unwrap() < 1e-22);
    }

    #[test]
    fn functional_equation() {
        // fixed pseudo-random ordinates on Re s = 0.3
        let mut t = 0.7_f64;
        for _ in 0..100 {
            t = (t * 7919.0 + 0.318).fract();
            let s = CDd::from_f64(0.3, 100.0 * t - 50.0);
            let lhs = zeta(s).unwrap();
            let rhs = chi(s) * zeta(CDd::ONE - s).unwrap();
            assert!((lhs - rhs).abs_f64() < 1e-15, "s = {s}");
        }
    }

    #[test]
    fn gamma_values() {
        let g = gamma(CDd::from_f64(0.5, 0.0));
        assert!((g.re - Dd::PI.sqrt()).abs().to_f64() < 1e-28);
        let g5 = gamma(CDd::from_f64(5.0, 0.0));
        assert!((g5.re - Dd::from_f64(24.0)).abs().to_f64() < 1e-26);
        // |Gamma(1/2 + it)|^2 = pi / cosh(pi t)
        let t = 3.0;
        let g = gamma(CDd::from_f64(0.5, t)).norm_sqr().to_f64();
        assert!((g - std::f64::consts::PI / (std::f64::consts::PI * t).cosh()).abs() < 1e-17);
    }
}
