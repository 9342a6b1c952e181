//! Euler products with exactly expanded local factors: `F_6` (hence `h`), `J` and `J_4`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};
use crate::primes::primes_up_to;
use crate::zeta::{rational_to_dd, zeta, zeta_real};

/// One factor `(1 - a x^k)^e` of a local factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalTerm {
    pub a: i64,
    pub k: u32,
    pub e: i32,
}

const fn lt(a: i64, k: u32, e: i32) -> LocalTerm {
    LocalTerm { a, k, e }
}

/// `(1-2x)(1-x)^-2(1-x^2)^-1(1-x^3)^-2(1-x^4)^-3(1-x^5)^-6(1-x^6)^-9`
pub const F6_LOCAL: [LocalTerm; 7] = [lt(2, 1, 1), lt(1, 1, -2), lt(1, 2, -1), lt(1, 3, -2), lt(1, 4, -3), lt(1, 5, -6), lt(1, 6, -9)];

/// `(1-x^2)^3 (1-x^4)^3 / ((1+2x)(1-x)^2(1-x^3)^2)`
pub const J4_LOCAL: [LocalTerm; 5] = [lt(1, 2, 3), lt(1, 4, 3), lt(-2, 1, -1), lt(1, 1, -2), lt(1, 3, -2)];

pub const DEFAULT_PRIME_CUTOFF: u64 = 1_000_000;

/// Largest `|x|` handled by the closed form; smaller ones use the log series.
const CLOSED_FORM_RADIUS: f64 = 1.0 / 32.0;

/// An Euler product `prod_p L(p^-s)` with exact local data.
#[derive(Clone, Debug)]
pub struct EulerProductSpec {
    pub terms: Vec<LocalTerm>,
    pub cutoff: u64,
    /// Log-series depth.
    pub depth: usize,
    /// Exact power-series coefficients of `L(x)`, `c_0..=c_depth`.
    pub coefficients: Vec<BigRational>,
    /// Exact coefficients of `log L(x)`, `b_0..=b_depth` (`b_0 = 0`).
    pub log_coefficients: Vec<BigRational>,
    log_f64: Vec<f64>,
    primes: Vec<u64>,
}

impl EulerProductSpec {
    pub fn new(terms: &[LocalTerm], cutoff: u64, depth: usize) -> Self {
        let log_coefficients = log_series(terms, depth);
        let coefficients = power_series(terms, depth);
        let log_f64 = log_coefficients.iter().map(|b| b.to_f64().unwrap_or(0.0)).collect();
        EulerProductSpec { terms: terms.to_vec(), cutoff, depth, coefficients, log_coefficients, log_f64, primes: primes_up_to(cutoff) }
    }

    pub fn f6() -> &'static EulerProductSpec {
        static F: OnceLock<EulerProductSpec> = OnceLock::new();
        F.get_or_init(|| EulerProductSpec::new(&F6_LOCAL, DEFAULT_PRIME_CUTOFF, 60))
    }

    pub fn j4() -> &'static EulerProductSpec {
        static J: OnceLock<EulerProductSpec> = OnceLock::new();
        J.get_or_init(|| EulerProductSpec::new(&J4_LOCAL, DEFAULT_PRIME_CUTOFF, 60))
    }

    /// Index of the first nonzero log coefficient past the constant.
    pub fn order(&self) -> usize {
        (1..self.log_coefficients.len()).find(|&n| !self.log_coefficients[n].is_zero()).unwrap_or(self.depth + 1)
    }

    /// `L(x)` in closed form.
    pub fn local_factor(&self, x: CDd) -> CDd {
        let mut num = CDd::ONE;
        let mut den = CDd::ONE;
        for t in &self.terms {
            let f = CDd::ONE - x.powi(t.k).scale(Dd::from_i64(t.a));
            if t.e >= 0 {
                num *= f.powi(t.e as u32);
            } else {
                den *= f.powi(t.e.unsigned_abs());
            }
        }
        num / den
    }

    /// `sum_{n >= order} b_n x^n` in double precision, truncated once negligible.
    fn log_series_f64(&self, xr: f64, xi: f64) -> (f64, f64) {
        let r = (xr * xr + xi * xi).sqrt();
        let (mut pr, mut pi) = (1.0, 0.0);
        let (mut sr, mut si) = (0.0, 0.0);
        let mut mag = 1.0;
        for n in 1..=self.depth {
            (pr, pi) = (pr * xr - pi * xi, pr * xi + pi * xr);
            mag *= r;
            let b = self.log_f64[n];
            if b != 0.0 {
                sr += b * pr;
                si += b * pi;
            }
            // |b_n| <= C 2^n
            if n >= self.order() && mag * 2f64.powi(n as i32) * 64.0 < 1e-22 {
                break;
            }
        }
        (sr, si)
    }

    /// Rigorous-style bound on `|log|` of the omitted primes `p > cutoff` at real part `sigma`.
    pub fn tail_bound(&self, sigma: f64) -> f64 {
        let p = self.cutoff as f64;
        let mut total = 0.0;
        for n in self.order()..=self.depth {
            let b = self.log_f64[n].abs();
            let e = n as f64 * sigma;
            if b == 0.0 || e <= 1.0 {
                if e <= 1.0 && b != 0.0 {
                    return f64::INFINITY;
                }
                continue;
            }
            total += b * p.powf(1.0 - e) / (e - 1.0);
        }
        // geometric bound for the part of the series past the stored depth
        let d = self.depth as f64;
        total + p * (2.0 * p.powf(-sigma)).powf(d + 1.0)
    }

    /// Product over `p <= cutoff` at `s`, plus the tail bound at `Re s`.
    pub fn evaluate(&self, s: CDd) -> Result<(CDd, f64)> {
        let sigma = s.re.to_f64();
        let tail = self.tail_bound(sigma);
        if !tail.is_finite() {
            return Err(Error::Domain(format!("Euler product diverges at Re s = {sigma}")));
        }
        let (t, neg_s) = (s.im.to_f64(), -s);
        let mut prod = CDd::ONE;
        let (mut lr, mut li) = (0.0f64, 0.0f64);
        for &p in &self.primes {
            let lnp = (p as f64).ln();
            let r = (-sigma * lnp).exp();
            if r > CLOSED_FORM_RADIUS {
                let x = neg_s.exp_scaled(Dd::from_u64(p).ln());
                prod *= self.local_factor(x);
            } else {
                let (sn, cs) = (-t * lnp).sin_cos();
                let (a, b) = self.log_series_f64(r * cs, r * sn);
                lr += a;
                li += b;
            }
        }
        let big = CDd::new(Dd::from_f64(lr), Dd::from_f64(li)).exp();
        Ok((prod * big, tail))
    }

    pub fn evaluate_real(&self, s: f64) -> Result<(f64, f64)> {
        let (v, tail) = self.evaluate(CDd::from_f64(s, 0.0))?;
        Ok((v.re.to_f64(), tail))
    }
}

/// `log L(x)` coefficients: `-sum_j e_j sum_m a_j^m x^{k_j m} / m`.
fn log_series(terms: &[LocalTerm], depth: usize) -> Vec<BigRational> {
    let mut b = vec![BigRational::zero(); depth + 1];
    for t in terms {
        let mut m = 1usize;
        let mut am = BigInt::from(t.a);
        while t.k as usize * m <= depth {
            let c = BigRational::new(am.clone() * BigInt::from(-t.e), BigInt::from(m));
            b[t.k as usize * m] += c;
            am *= BigInt::from(t.a);
            m += 1;
        }
    }
    b
}

/// Power series of `L(x)` by multiplying out binomial expansions.
fn power_series(terms: &[LocalTerm], depth: usize) -> Vec<BigRational> {
    let mut c = vec![BigInt::zero(); depth + 1];
    c[0] = BigInt::one();
    for t in terms {
        // (1 - a y)^e with y = x^k: coefficients binom(e, j) (-a)^j
        let mut f = vec![BigInt::zero(); depth + 1];
        let mut coef = BigRational::one();
        let e = BigRational::from_integer(BigInt::from(t.e));
        let mut j = 0usize;
        while j * (t.k as usize) <= depth {
            f[j * t.k as usize] = coef.to_integer();
            // binom(e, j+1)(-a)^{j+1} = binom(e, j)(-a)^j * (e - j)/(j + 1) * (-a)
            coef = coef * (e.clone() - BigRational::from_integer(BigInt::from(j))) / BigRational::from_integer(BigInt::from(j + 1))
                * BigRational::from_integer(BigInt::from(-t.a));
            j += 1;
        }
        let mut out = vec![BigInt::zero(); depth + 1];
        for (i, ci) in c.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            for (k, fk) in f.iter().enumerate().take(depth + 1 - i) {
                if !fk.is_zero() {
                    out[i + k] += ci * fk;
                }
            }
        }
        c = out;
    }
    c.into_iter().map(BigRational::from_integer).collect()
}

/// Coefficients of `x^7, x^8, x^9` in the `F_6` local factor.
pub fn h_series_check() -> (BigInt, BigInt, BigInt) {
    let c = &EulerProductSpec::f6().coefficients;
    (c[7].to_integer(), c[8].to_integer(), c[9].to_integer())
}

/// `F_6(s)` with its tail bound.
pub fn f6(s: CDd) -> Result<(CDd, f64)> {
    EulerProductSpec::f6().evaluate(s)
}

/// `zeta(2s) zeta(3s)^2 zeta(4s)^3 zeta(5s)^6 zeta(6s)^9`, i.e. `Z_6` without `zeta(s)`.
pub fn z6_reduced(s: CDd) -> Result<CDd> {
    let mut acc = CDd::ONE;
    for (k, e) in [(2.0, 1u32), (3.0, 2), (4.0, 3), (5.0, 6), (6.0, 9)] {
        acc *= zeta(s.scale_f64(k))?.powi(e);
    }
    Ok(acc)
}

/// `h(s) = F_6(s) / Z_6(s)` for complex `s`; `h(1) = 0`.
pub fn h_complex(s: CDd) -> Result<CDd> {
    if s == CDd::ONE {
        return Ok(CDd::ZERO);
    }
    let (f, _) = f6(s)?;
    Ok(f / (zeta(s)? * z6_reduced(s)?))
}

/// `h(alpha)` for `alpha` in `[1/2, 1]`; zero at both ends.
pub fn h_of_alpha(alpha: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("h(alpha) needs 1/2 <= alpha <= 1, got {alpha}")));
    }
    if alpha == 0.5 || alpha == 1.0 {
        return Ok(0.0);
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&alpha.to_bits()) {
        return Ok(*v);
    }
    let v = h_complex(CDd::from_f64(alpha, 0.0))?.re.to_f64();
    cache.lock().unwrap().insert(alpha.to_bits(), v);
    Ok(v)
}

/// `E_1(z)` for real `z > 0`.
pub fn exp_integral_e1(z: f64) -> f64 {
    if z <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -z / k as f64;
            sum -= term / k as f64;
        }
        -crate::dd::Dd::EULER_GAMMA.to_f64() - z.ln() + sum
    } else {
        // continued fraction (modified Lentz)
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..300 {
            let an = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        h * (-z).exp()
    }
}

/// `sum_{p > P} p^-s` for real `s > 1` by the logarithmic-integral density.
pub fn prime_tail_estimate(s: f64, cutoff: u64) -> f64 {
    exp_integral_e1((s - 1.0) * (cutoff as f64).ln())
}

/// Direct truncated product `prod_{p <= P} (1 + c p^-s)` for real `s > 1`, with
/// the tail folded in by density; returns `(value, tail_correction)`.
pub fn direct_product(c: f64, s: f64, cutoff: u64) -> Result<(f64, f64)> {
    if s <= 1.0 {
        return Err(Error::Domain(format!("direct product needs s > 1, got {s}")));
    }
    let mut log = Dd::ZERO;
    for p in primes_up_to(cutoff) {
        let x = (-s * (p as f64).ln()).exp();
        log += Dd::from_f64((c * x).ln_1p());
    }
    let tail = c * prime_tail_estimate(s, cutoff) - 0.5 * c * c * prime_tail_estimate(2.0 * s, cutoff);
    Ok(((log.to_f64() + tail).exp(), tail))
}

/// `J(s) = prod_p (1 + 2 p^-s)^-1`, direct, for real `s > 1`.
pub fn j_direct(s: f64) -> Result<f64> {
    Ok(1.0 / direct_product(2.0, s, 10_000_000)?.0)
}

/// `J_4(s)` for `Re s > 1/5`.
pub fn j4(s: CDd) -> Result<(CDd, f64)> {
    if s.re.to_f64() <= 0.2 {
        return Err(Error::Domain("J_4 needs Re s > 1/5".into()));
    }
    EulerProductSpec::j4().evaluate(s)
}

/// `J(s) = zeta(2s)^3 zeta(4s)^3 J_4(s) / (zeta(s)^2 zeta(3s)^2)`.
pub fn j_factored(s: CDd) -> Result<CDd> {
    let (j, _) = j4(s)?;
    let num = zeta(s.scale_f64(2.0))?.powi(3) * zeta(s.scale_f64(4.0))?.powi(3) * j;
    let den = zeta(s)?.powi(2) * zeta(s.scale_f64(3.0))?.powi(2);
    Ok(num / den)
}

/// Real `zeta` helper re-exported for callers assembling `Z_6` by hand.
pub fn z6_real(alpha: f64) -> Result<f64> {
    let mut acc = zeta_real(alpha)?;
    for (k, e) in [(2.0, 1), (3.0, 2), (4.0, 3), (5.0, 6), (6.0, 9)] {
        acc *= zeta_real(k * alpha)?.powi(e);
    }
    Ok(acc)
}

/// Exact coefficient as a `Dd`.
pub fn coefficient_dd(r: &BigRational) -> Dd {
    rational_to_dd(r)
}

/// True when every coefficient `1..order` of the log series vanishes exactly.
pub fn vanishes_below(spec: &EulerProductSpec, order: usize) -> bool {
    spec.log_coefficients[1..order].iter().all(|b| b.is_zero()) && spec.coefficients[1..order].iter().all(|c| c.is_zero())
}

/// Largest `|b_n|` among the stored log coefficients.
pub fn max_log_coefficient(spec: &EulerProductSpec) -> f64 {
    spec.log_coefficients.iter().map(|b| b.abs().to_f64().unwrap_or(0.0)).fold(0.0, f64::max)
}
