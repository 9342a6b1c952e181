//! Double-double arithmetic.
//!
//! A [`Dd`] is an unevaluated sum `hi + lo` of two `f64` with `|lo| <= ulp(hi)/2`,
//! giving roughly 31 significant decimal digits. Products use Dekker splitting
//! so no FMA instruction is required. [`CDd`] is the complex counterpart used by
//! the zeta and Euler-product code.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    // 2^27 + 1
    const SPLITTER: f64 = 134_217_729.0;
    const THRESH: f64 = 6.696_928_794_914_17e299;
    if a.abs() > THRESH {
        let a = a * 3.725_290_298_461_914e-9;
        let t = SPLITTER * a;
        let hi = t - (t - a);
        let lo = a - hi;
        (hi * 268_435_456.0, lo * 268_435_456.0)
    } else {
        let t = SPLITTER * a;
        let hi = t - (t - a);
        (hi, a - hi)
    }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

#[inline]
fn two_sqr(a: f64) -> (f64, f64) {
    let p = a * a;
    let (h, l) = split(a);
    (p, ((h * h - p) + 2.0 * h * l) + l * l)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd { hi: 3.141592653589793, lo: 1.2246467991473532e-16 };
    pub const TWO_PI: Dd = Dd { hi: 6.283185307179586, lo: 2.4492935982947064e-16 };
    pub const HALF_PI: Dd = Dd { hi: 1.5707963267948966, lo: 6.123233995736766e-17 };
    pub const LN2: Dd = Dd { hi: 0.6931471805599453, lo: 2.3190468138462996e-17 };
    /// Euler's constant 0.57721...
    pub const EULER_GAMMA: Dd = Dd { hi: 0.5772156649015329, lo: -4.942915152430645e-18 };
    pub const LN_2PI: Dd = Dd { hi: 1.8378770664093456, lo: -7.756588316134483e-17 };

    // third words for argument reduction
    const TWO_PI_3: f64 = -5.989539619436679e-33;
    const HALF_PI_3: f64 = -1.4973849048591698e-33;

    #[inline]
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact conversion for every `u64`.
    pub fn from_u64(n: u64) -> Self {
        let hi = n as f64;
        // `hi` may round up past u64::MAX only for values near 2^64; go through i128.
        let rem = n as i128 - hi as i128;
        let (h, l) = quick_two_sum(hi, rem as f64);
        Dd { hi: h, lo: l }
    }

    pub fn from_i64(n: i64) -> Self {
        let d = Dd::from_u64(n.unsigned_abs());
        if n < 0 {
            -d
        } else {
            d
        }
    }

    /// Exact conversion for `|n| < 2^106`, rounded beyond that.
    pub fn from_i128(n: i128) -> Self {
        let hi = n as f64;
        let rem = n - hi as i128;
        let (h, l) = quick_two_sum(hi, rem as f64);
        Dd { hi: h, lo: l }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn signum(self) -> f64 {
        if self.hi > 0.0 {
            1.0
        } else if self.hi < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, b);
        let s2 = s2 + self.lo;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let p2 = p2 + self.lo * b;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sqr(self) -> Self {
        let (p1, p2) = two_sqr(self.hi);
        let p2 = p2 + 2.0 * self.hi * self.lo + self.lo * self.lo;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    pub fn mul_pow2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::ZERO } else { Dd::from_f64(f64::NAN) };
        }
        // one Newton step on 1/sqrt gives full precision (Karp's trick)
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let diff = self - Dd::from_f64(ax).sqr();
        Dd::from_f64(ax).add_f64(diff.hi * (x * 0.5))
    }

    pub fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            let (h, l) = quick_two_sum(hi, self.lo.floor());
            Dd { hi: h, lo: l }
        } else {
            Dd { hi, lo: 0.0 }
        }
    }

    pub fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            let lo = self.lo.round();
            let (h, l) = quick_two_sum(hi, lo);
            Dd { hi: h, lo: l }
        } else if (hi - self.hi).abs() == 0.5 {
            // exact tie in hi decided by lo
            let r = if self.lo > 0.0 { self.hi.ceil() } else if self.lo < 0.0 { self.hi.floor() } else { hi };
            Dd { hi: r, lo: 0.0 }
        } else {
            Dd { hi, lo: 0.0 }
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / Dd::LN2.hi).round();
        let r = (self - Dd::LN2.mul_f64(k)).mul_pow2(-5);
        // Taylor series, |r| < 0.011
        let f = inv_factorials();
        let mut sum = Dd::ZERO;
        for i in (1..=14).rev() {
            sum = (sum + f[i]) * r;
        }
        // (1 + s)^2 - 1 = 2s + s^2, keeps the small part exact
        for _ in 0..5 {
            sum = sum.mul_f64(2.0) + sum.sqr();
        }
        (sum + Dd::ONE).mul_pow2(k as i32)
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        if self.hi == 1.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    /// `x^p` for positive `x`.
    pub fn powf(self, p: Dd) -> Self {
        (self.ln() * p).exp()
    }

    /// Returns `(sin x, cos x)`.
    pub fn sin_cos(self) -> (Dd, Dd) {
        if self.hi == 0.0 {
            return (Dd::ZERO, Dd::ONE);
        }
        let r = reduce_mod_two_pi(self);
        // r in [-pi, pi]; reduce by pi/2 multiples
        let j = (r.hi / Dd::HALF_PI.hi).round();
        let t = r - Dd::HALF_PI.mul_f64(j) - Dd::from_f64(Dd::HALF_PI_3 * j);
        let (s, c) = sin_cos_taylor(t);
        match (j as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(self) -> Self {
        self.sin_cos().1
    }

    /// Four-quadrant arctangent of `y / x`.
    pub fn atan2(y: Dd, x: Dd) -> Dd {
        if x.hi == 0.0 && y.hi == 0.0 {
            return Dd::ZERO;
        }
        let mut th = Dd::from_f64(y.hi.atan2(x.hi));
        // Newton on the unit circle: th += (y cos - x sin) / (x cos + y sin)
        let r = (x.sqr() + y.sqr()).sqrt();
        let (yn, xn) = (y / r, x / r);
        for _ in 0..2 {
            let (s, c) = th.sin_cos();
            th += yn * c - xn * s;
        }
        th
    }

    pub fn parse(s: &str) -> Option<Dd> {
        parse_decimal(s)
    }

    /// Round-trip text form `hi,lo` (shortest exact representations).
    pub fn to_exact_string(self) -> String {
        format!("{:e},{:e}", self.hi, self.lo)
    }

    pub fn from_exact_string(s: &str) -> Option<Dd> {
        let (h, l) = s.split_once(',')?;
        Some(Dd { hi: h.trim().parse().ok()?, lo: l.trim().parse().ok()? })
    }
}

fn reduce_mod_two_pi(x: Dd) -> Dd {
    if x.hi.abs() <= std::f64::consts::PI {
        return x;
    }
    let k = (x.hi / Dd::TWO_PI.hi).round();
    let (p1, p2) = two_prod(Dd::TWO_PI.hi, k);
    let (q1, q2) = two_prod(Dd::TWO_PI.lo, k);
    // x - k*(a + b + c) with each product kept exact
    let r = x - Dd { hi: p1, lo: 0.0 } - Dd { hi: p2, lo: 0.0 };
    let r = r - Dd::from_f64(q1) - Dd::from_f64(q2 + Dd::TWO_PI_3 * k);
    // k may be off by one after rounding of x.hi / 2pi
    if r.hi > std::f64::consts::PI {
        r - Dd::TWO_PI
    } else if r.hi < -std::f64::consts::PI {
        r + Dd::TWO_PI
    } else {
        r
    }
}

fn sin_cos_taylor(t: Dd) -> (Dd, Dd) {
    let f = inv_factorials();
    let t2 = t.sqr();
    let mut s = Dd::ZERO;
    let mut c = Dd::ZERO;
    // |t| <= pi/4: 27! term is below 1e-33
    for k in (0..=13).rev() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s = s * t2 + f[2 * k + 1].mul_f64(sign);
        c = c * t2 + f[2 * k].mul_f64(sign);
    }
    (s * t, c)
}

/// `1/k!` for k = 0..=40.
pub(crate) fn inv_factorials() -> &'static [Dd; 41] {
    static TABLE: OnceLock<[Dd; 41]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [Dd::ONE; 41];
        for k in 1..41 {
            t[k] = t[k - 1] / Dd::from_f64(k as f64);
        }
        t
    })
}

fn parse_decimal(s: &str) -> Option<Dd> {
    let s = s.trim();
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).collect();
    if !digits.iter().all(u8::is_ascii_digit) {
        return None;
    }
    // accumulate in chunks of 15 digits
    let mut acc = Dd::ZERO;
    for chunk in digits.chunks(15) {
        let v: u64 = std::str::from_utf8(chunk).ok()?.parse().ok()?;
        acc = acc * Dd::from_f64(10f64.powi(chunk.len() as i32)) + Dd::from_u64(v);
    }
    let scale = exp - frac_part.len() as i32;
    let ten = Dd::from_f64(10.0);
    acc = if scale >= 0 { acc * ten.powi(scale) } else { acc / ten.powi(-scale) };
    Some(if neg { -acc } else { acc })
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 32 significant digits by repeated extraction
        if !self.is_finite() {
            return write!(f, "{}", self.hi);
        }
        if self.hi == 0.0 {
            return write!(f, "0");
        }
        let neg = self.hi < 0.0;
        let mut x = self.abs();
        let mut e = x.hi.log10().floor() as i32;
        let ten = Dd::from_f64(10.0);
        x = if e >= 0 { x / ten.powi(e) } else { x * ten.powi(-e) };
        if x.hi >= 10.0 {
            x = x / ten;
            e += 1;
        } else if x.hi < 1.0 {
            x = x * ten;
            e -= 1;
        }
        let prec = f.precision().unwrap_or(31);
        let mut digits = String::with_capacity(prec + 2);
        for _ in 0..=prec {
            let d = x.hi.floor().clamp(0.0, 9.0);
            digits.push((b'0' + d as u8) as char);
            x = (x - Dd::from_f64(d)) * ten;
        }
        let (first, rest) = digits.split_at(1);
        write!(f, "{}{}.{}e{}", if neg { "-" } else { "" }, first, rest, e)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd { hi: q1, lo: q2 }.add_f64(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $f:ident $op:tt),*) => {$(
        impl $tr for Dd {
            #[inline]
            fn $f(&mut self, b: Dd) { *self = *self $op b; }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

/// Complex double-double.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub const ZERO: CDd = CDd { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: CDd = CDd { re: Dd::ONE, im: Dd::ZERO };

    #[inline]
    pub const fn new(re: Dd, im: Dd) -> Self {
        CDd { re, im }
    }

    #[inline]
    pub const fn from_f64(re: f64, im: f64) -> Self {
        CDd { re: Dd::from_f64(re), im: Dd::from_f64(im) }
    }

    #[inline]
    pub const fn real(re: Dd) -> Self {
        CDd { re, im: Dd::ZERO }
    }

    #[inline]
    pub fn conj(self) -> Self {
        CDd { re: self.re, im: -self.im }
    }

    #[inline]
    pub fn norm_sqr(self) -> Dd {
        self.re.sqr() + self.im.sqr()
    }

    pub fn abs(self) -> Dd {
        self.norm_sqr().sqrt()
    }

    pub fn abs_f64(self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }

    pub fn arg(self) -> Dd {
        Dd::atan2(self.im, self.re)
    }

    #[inline]
    pub fn scale(self, k: Dd) -> Self {
        CDd { re: self.re * k, im: self.im * k }
    }

    #[inline]
    pub fn scale_f64(self, k: f64) -> Self {
        CDd { re: self.re.mul_f64(k), im: self.im.mul_f64(k) }
    }

    pub fn recip(self) -> Self {
        let d = self.norm_sqr();
        CDd { re: self.re / d, im: -self.im / d }
    }

    pub fn exp(self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        CDd { re: m * c, im: m * s }
    }

    /// Principal branch.
    pub fn ln(self) -> Self {
        CDd { re: self.norm_sqr().ln().mul_f64(0.5), im: self.arg() }
    }

    /// `base^self` for a positive real base given by its logarithm.
    pub fn exp_scaled(self, ln_base: Dd) -> Self {
        CDd { re: self.re * ln_base, im: self.im * ln_base }.exp()
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = CDd::ONE;
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn to_f64_pair(self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl fmt::Debug for CDd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.re, self.im)
    }
}

impl fmt::Display for CDd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_f64_pair();
        if im < 0.0 {
            write!(f, "{re:.17e} - {:.17e}i", -im)
        } else {
            write!(f, "{re:.17e} + {im:.17e}i")
        }
    }
}

impl Neg for CDd {
    type Output = CDd;
    #[inline]
    fn neg(self) -> CDd {
        CDd { re: -self.re, im: -self.im }
    }
}

impl Add for CDd {
    type Output = CDd;
    #[inline]
    fn add(self, b: CDd) -> CDd {
        CDd { re: self.re + b.re, im: self.im + b.im }
    }
}

impl Sub for CDd {
    type Output = CDd;
    #[inline]
    fn sub(self, b: CDd) -> CDd {
        CDd { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Mul for CDd {
    type Output = CDd;
    #[inline]
    fn mul(self, b: CDd) -> CDd {
        CDd { re: self.re * b.re - self.im * b.im, im: self.re * b.im + self.im * b.re }
    }
}

impl Div for CDd {
    type Output = CDd;
    fn div(self, b: CDd) -> CDd {
        let d = b.norm_sqr();
        let n = self * b.conj();
        CDd { re: n.re / d, im: n.im / d }
    }
}

impl Add<Dd> for CDd {
    type Output = CDd;
    fn add(self, b: Dd) -> CDd {
        CDd { re: self.re + b, im: self.im }
    }
}

impl Sub<Dd> for CDd {
    type Output = CDd;
    fn sub(self, b: Dd) -> CDd {
        CDd { re: self.re - b, im: self.im }
    }
}

impl Mul<Dd> for CDd {
    type Output = CDd;
    fn mul(self, b: Dd) -> CDd {
        self.scale(b)
    }
}

impl AddAssign for CDd {
    #[inline]
    fn add_assign(&mut self, b: CDd) {
        *self = *self + b;
    }
}

impl SubAssign for CDd {
    #[inline]
    fn sub_assign(&mut self, b: CDd) {
        *self = *self - b;
    }
}

impl MulAssign for CDd {
    #[inline]
    fn mul_assign(&mut self, b: CDd) {
        *self = *self * b;
    }
}

/// Neumaier-compensated sum of `f64` terms held as a double-double.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    acc: Dd,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        self.acc = self.acc.add_f64(x);
    }

    #[inline]
    pub fn add_dd(&mut self, x: Dd) {
        self.acc += x;
    }

    pub fn value(&self) -> Dd {
        self.acc
    }
}
