//! Elementary arithmetic functions and the slow reference evaluation of every
//! sum family. Everything here is per-`n` trial division: simple, and trusted
//! as the yardstick for the sieve engine.

use std::fmt;
use std::str::FromStr;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::primes::primes_up_to;

/// Which weighted sum is being computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `L_a(x) = sum (-1)^Omega(n) / n^a`
    PolyaL,
    /// `H_a(x) = sum (-1)^omega(n) / n^a`
    OmegaH,
    /// `S_a(x) = sum (-1)^(n - Omega(n)) / n^a`
    SunS,
    /// `W(x) = sum (-2)^Omega(n)`
    GrosswaldW,
    /// `S_d(x) = sum (-1)^(n - Omega(n)) (d/n)`
    TwistedS(i64),
    /// number of `n <= x` with `m | n - Omega(n)`
    DivCount(u32),
}

/// A sum family together with its exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumSpec {
    family: Family,
    alpha: f64,
}

impl SumSpec {
    pub fn new(family: Family, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidSpec(format!("alpha {alpha} outside [0, 1]")));
        }
        match family {
            Family::GrosswaldW | Family::TwistedS(_) | Family::DivCount(_) if alpha != 0.0 => {
                return Err(Error::InvalidSpec(format!("{family:?} has no exponent")));
            }
            Family::TwistedS(d) if d.rem_euclid(4) > 1 => {
                return Err(Error::InvalidSpec(format!("discriminant {d} is not 0 or 1 mod 4")));
            }
            Family::DivCount(m) if m < 2 => {
                return Err(Error::InvalidSpec(format!("modulus {m} must be at least 2")));
            }
            _ => {}
        }
        Ok(SumSpec { family, alpha })
    }

    pub fn polya(alpha: f64) -> Result<Self> {
        Self::new(Family::PolyaL, alpha)
    }

    pub fn omega_h(alpha: f64) -> Result<Self> {
        Self::new(Family::OmegaH, alpha)
    }

    pub fn sun(alpha: f64) -> Result<Self> {
        Self::new(Family::SunS, alpha)
    }

    pub fn grosswald() -> Self {
        SumSpec { family: Family::GrosswaldW, alpha: 0.0 }
    }

    pub fn twisted(d: i64) -> Result<Self> {
        Self::new(Family::TwistedS(d), 0.0)
    }

    pub fn div_count(m: u32) -> Result<Self> {
        Self::new(Family::DivCount(m), 0.0)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// True when every term is an integer, so sums are exact integers.
    pub fn is_integral(&self) -> bool {
        self.alpha == 0.0
    }

    /// Needs the full value of `Omega(n)`, not just a parity.
    pub fn needs_omega_value(&self) -> bool {
        matches!(self.family, Family::GrosswaldW | Family::DivCount(_))
    }

    /// Short label used in file names and CSV headers, e.g. `S0.25`, `W`, `Sd-4`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::PolyaL => write!(f, "L{}", self.alpha),
            Family::OmegaH => write!(f, "H{}", self.alpha),
            Family::SunS => write!(f, "S{}", self.alpha),
            Family::GrosswaldW => write!(f, "W"),
            Family::TwistedS(d) => write!(f, "Sd{d}"),
            Family::DivCount(m) => write!(f, "D{m}"),
        }
    }
}

impl FromStr for SumSpec {
    type Err = Error;

    /// Parses the labels produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("unrecognized sum label {s:?}"));
        let s = s.trim();
        if s == "W" {
            return Ok(SumSpec::grosswald());
        }
        if let Some(d) = s.strip_prefix("Sd") {
            return SumSpec::twisted(d.parse().map_err(|_| bad())?);
        }
        let (head, rest) = s.split_at(1.min(s.len()));
        let num = |r: &str| r.parse::<f64>().map_err(|_| bad());
        match head {
            "L" => SumSpec::polya(num(rest)?),
            "H" => SumSpec::omega_h(num(rest)?),
            "S" => SumSpec::sun(num(rest)?),
            "D" => SumSpec::div_count(rest.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

/// Prime factorization `n = prod p^e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub prime_powers: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn big_omega(&self) -> u32 {
        self.prime_powers.iter().map(|&(_, e)| e).sum()
    }

    pub fn small_omega(&self) -> u32 {
        self.prime_powers.len() as u32
    }
}

/// Factorize by trial division (sufficient for the oracle's range).
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut prime_powers = Vec::new();
    let mut m = n;
    let mut push = |p: u64, m: &mut u64| {
        let mut e = 0;
        while *m % p == 0 {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            prime_powers.push((p, e));
        }
    };
    push(2, &mut m);
    push(3, &mut m);
    let mut p = 5;
    while p * p <= m {
        push(p, &mut m);
        push(p + 2, &mut m);
        p += 6;
    }
    if m > 1 {
        prime_powers.push((m, 1));
    }
    Factorization { n, prime_powers }
}

pub fn big_omega(n: u64) -> u32 {
    factorize(n).big_omega()
}

pub fn small_omega(n: u64) -> u32 {
    factorize(n).small_omega()
}

/// `(-1)^Omega(n)`
pub fn liouville(n: u64) -> i8 {
    if big_omega(n) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Kronecker symbol `(d/n)` for a discriminant `d` (`d = 0, 1 mod 4`) and `n >= 1`.
pub fn kronecker(d: i64, n: u64) -> Result<i8> {
    if d.rem_euclid(4) > 1 {
        return Err(Error::InvalidSpec(format!("discriminant {d} is not 0 or 1 mod 4")));
    }
    if n == 0 {
        return Err(Error::InvalidSpec("kronecker symbol needs n >= 1".into()));
    }
    Ok(kronecker_unchecked(d as i128, n))
}

pub(crate) fn kronecker_unchecked(a: i128, n: u64) -> i8 {
    let mut n = n as i128;
    // factor out 2 from n
    let tz = n.trailing_zeros();
    let mut result: i8 = 1;
    if tz > 0 {
        if a % 2 == 0 {
            return 0;
        }
        // (a/2) = +1 if a = +-1 mod 8, -1 if a = +-3 mod 8
        if tz % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        n >>= tz;
    }
    // now n odd positive: Jacobi symbol (a/n)
    let mut a = a.rem_euclid(n);
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Positive and negative contributions kept apart.
///
/// Integral families use 128-bit counters; the others use double-double parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExactAccumulator {
    Int { pos: u128, neg: u128 },
    Real { pos: Dd, neg: Dd },
}

impl ExactAccumulator {
    pub fn zero_for(spec: &SumSpec) -> Self {
        if spec.is_integral() {
            ExactAccumulator::Int { pos: 0, neg: 0 }
        } else {
            ExactAccumulator::Real { pos: Dd::ZERO, neg: Dd::ZERO }
        }
    }

    #[inline]
    pub fn add_int(&mut self, v: i64) {
        if let ExactAccumulator::Int { pos, neg } = self {
            if v >= 0 {
                *pos += v as u128;
            } else {
                *neg += v.unsigned_abs() as u128;
            }
        } else {
            self.add_real(v as f64);
        }
    }

    #[inline]
    pub fn add_real(&mut self, v: f64) {
        match self {
            ExactAccumulator::Real { pos, neg } => {
                if v >= 0.0 {
                    *pos = pos.add_f64(v);
                } else {
                    *neg = neg.add_f64(-v);
                }
            }
            ExactAccumulator::Int { .. } => panic!("real term added to an integer accumulator"),
        }
    }

    pub fn add_real_dd(&mut self, v: Dd) {
        match self {
            ExactAccumulator::Real { pos, neg } => {
                if v.hi >= 0.0 {
                    *pos += v;
                } else {
                    *neg -= v;
                }
            }
            ExactAccumulator::Int { .. } => panic!("real term added to an integer accumulator"),
        }
    }

    pub fn merge(&mut self, other: &ExactAccumulator) {
        match (self, other) {
            (ExactAccumulator::Int { pos, neg }, ExactAccumulator::Int { pos: p, neg: n }) => {
                *pos += p;
                *neg += n;
            }
            (ExactAccumulator::Real { pos, neg }, ExactAccumulator::Real { pos: p, neg: n }) => {
                *pos += *p;
                *neg += *n;
            }
            _ => panic!("accumulator kinds differ"),
        }
    }

    /// Exact signed value; `None` for real accumulators.
    pub fn int_value(&self) -> Option<i128> {
        match *self {
            ExactAccumulator::Int { pos, neg } => Some(pos as i128 - neg as i128),
            ExactAccumulator::Real { .. } => None,
        }
    }

    pub fn value(&self) -> Dd {
        match *self {
            ExactAccumulator::Int { pos, neg } => Dd::from_i128(pos as i128 - neg as i128),
            ExactAccumulator::Real { pos, neg } => pos - neg,
        }
    }

    pub fn value_f64(&self) -> f64 {
        self.value().to_f64()
    }

    pub fn positive_part(&self) -> Dd {
        match *self {
            ExactAccumulator::Int { pos, .. } => Dd::from_i128(pos as i128),
            ExactAccumulator::Real { pos, .. } => pos,
        }
    }

    pub fn negative_part(&self) -> Dd {
        match *self {
            ExactAccumulator::Int { neg, .. } => Dd::from_i128(neg as i128),
            ExactAccumulator::Real { neg, .. } => neg,
        }
    }

    /// Text for the positive and negative parts, lossless.
    pub fn to_strings(&self) -> (String, String) {
        match *self {
            ExactAccumulator::Int { pos, neg } => (pos.to_string(), neg.to_string()),
            ExactAccumulator::Real { pos, neg } => (pos.to_exact_string(), neg.to_exact_string()),
        }
    }

    pub fn from_strings(spec: &SumSpec, pos: &str, neg: &str) -> Option<Self> {
        if spec.is_integral() {
            Some(ExactAccumulator::Int { pos: pos.parse().ok()?, neg: neg.parse().ok()? })
        } else {
            Some(ExactAccumulator::Real {
                pos: Dd::from_exact_string(pos)?,
                neg: Dd::from_exact_string(neg)?,
            })
        }
    }
}

/// Per-`n` arithmetic data from which every family's term is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NumberInfo {
    pub n: u64,
    pub big_omega: u32,
    pub small_omega: u32,
}

/// Integer part of a term (for integral families) given `Omega`/`omega`.
#[inline]
pub(crate) fn integral_term(family: Family, n: u64, big: u32, small: u32, kron: i8) -> i64 {
    let parity_n_minus = (n.wrapping_sub(big as u64)) & 1;
    let sun_sign = if parity_n_minus == 0 { 1 } else { -1 };
    match family {
        Family::PolyaL => {
            if big % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Family::OmegaH => {
            if small % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Family::SunS => sun_sign,
        Family::GrosswaldW => {
            let mag = 1i64 << big;
            if big % 2 == 0 {
                mag
            } else {
                -mag
            }
        }
        Family::TwistedS(_) => sun_sign * kron as i64,
        Family::DivCount(m) => {
            let m = m as u64;
            // n - Omega(n) mod m without underflow
            let r = (n % m + m - (big as u64 % m)) % m;
            (r == 0) as i64
        }
    }
}

/// Default ceiling on `x` for [`oracle_sum`].
pub const ORACLE_LIMIT: u64 = 10_000_000;

/// Literal `sum_{n <= x} term(n)` by factoring every `n`.
pub fn oracle_sum(spec: &SumSpec, x: u64) -> Result<ExactAccumulator> {
    oracle_sum_with_limit(spec, x, ORACLE_LIMIT)
}

pub fn oracle_sum_with_limit(spec: &SumSpec, x: u64, limit: u64) -> Result<ExactAccumulator> {
    Ok(oracle_prefix_sums(spec, x, limit)?.pop().unwrap_or_else(|| ExactAccumulator::zero_for(spec)))
}

/// Running values `[S(1), S(2), ..., S(x)]`.
pub fn oracle_prefix_sums(spec: &SumSpec, x: u64, limit: u64) -> Result<Vec<ExactAccumulator>> {
    if x > limit {
        return Err(Error::OracleLimit { x, limit });
    }
    let root = (x as f64).sqrt() as u64 + 2;
    let primes = primes_up_to(root);
    let mut acc = ExactAccumulator::zero_for(spec);
    let mut out = Vec::with_capacity(x as usize);
    let alpha = Dd::from_f64(spec.alpha);
    for n in 1..=x {
        let (big, small) = trial_omegas(n, &primes);
        let kron = match spec.family {
            Family::TwistedS(d) => kronecker_unchecked(d as i128, n),
            _ => 0,
        };
        let t = integral_term(spec.family, n, big, small, kron);
        if spec.is_integral() {
            acc.add_int(t);
        } else {
            // n^-alpha to double-double accuracy
            let w = (-(Dd::from_u64(n).ln() * alpha)).exp();
            acc.add_real_dd(if t < 0 { -w } else { w });
        }
        out.push(acc);
    }
    Ok(out)
}

fn trial_omegas(n: u64, primes: &[u64]) -> (u32, u32) {
    let mut m = n;
    let (mut big, mut small) = (0, 0);
    for &p in primes {
        if p * p > m {
            break;
        }
        if m % p == 0 {
            small += 1;
            while m % p == 0 {
                m /= p;
                big += 1;
            }
        }
    }
    if m > 1 {
        big += 1;
        small += 1;
    }
    (big, small)
}
