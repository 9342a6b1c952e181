//! Bit-packed base table of factor data for `n <= M` with `gcd(n, 30) = 1`.
//!
//! Eight residues per block of thirty. Parity modes spend two bits per entry
//! (`00` unknown, `10` even, `11` odd); the value mode spends four bits and
//! stores `Omega(n)` exactly, with `0xF` reserved for "unknown" while building.

use std::fs::File;
use std::hash::Hasher;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use fnv::FnvHasher;

use crate::arith::{factorize, Family, SumSpec};
use crate::error::{Error, Result};
use crate::primes::primes_up_to;

/// Residues mod 30 coprime to 30.
pub const RESIDUES: [u64; 8] = [1, 7, 11, 13, 17, 19, 23, 29];

/// Slot of each residue mod 30, or `u8::MAX` when not coprime.
const SLOT: [u8; 30] = {
    let mut s = [u8::MAX; 30];
    let mut i = 0;
    while i < 8 {
        s[RESIDUES[i] as usize] = i as u8;
        i += 1;
    }
    s
};

/// Distance from each residue to the next one coprime to 30.
const WHEEL_NEXT: [u64; 30] = {
    let mut g = [0u64; 30];
    let mut r = 0;
    while r < 30 {
        let mut d = 1;
        while SLOT[(r + d) % 30] == u8::MAX {
            d += 1;
        }
        g[r] = d as u64;
        r += 1;
    }
    g
};

const MAGIC: [u8; 4] = *b"OSXT";
const FORMAT_VERSION: u16 = 1;
const UNKNOWN_VALUE: u64 = 0xF;

/// What each entry records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableMode {
    /// parity of `n - Omega(n)`
    ParityNMinusOmega,
    /// parity of `omega(n)`
    ParityOmegaDistinct,
    /// `Omega(n)` itself
    OmegaValue,
}

impl TableMode {
    pub fn bits_per_entry(self) -> u32 {
        match self {
            TableMode::OmegaValue => 4,
            _ => 2,
        }
    }

    fn code(self) -> u8 {
        match self {
            TableMode::ParityNMinusOmega => 0,
            TableMode::ParityOmegaDistinct => 1,
            TableMode::OmegaValue => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => TableMode::ParityNMinusOmega,
            1 => TableMode::ParityOmegaDistinct,
            2 => TableMode::OmegaValue,
            _ => return None,
        })
    }

    /// Whether a table in this mode carries enough to evaluate `spec`.
    pub fn supports(self, spec: &SumSpec) -> bool {
        match spec.family() {
            Family::OmegaH => self == TableMode::ParityOmegaDistinct,
            Family::GrosswaldW | Family::DivCount(_) => self == TableMode::OmegaValue,
            Family::PolyaL | Family::SunS | Family::TwistedS(_) => self != TableMode::ParityOmegaDistinct,
        }
    }

    /// The cheapest mode that serves every spec, if any.
    pub fn for_specs(specs: &[SumSpec]) -> Option<TableMode> {
        [TableMode::ParityNMinusOmega, TableMode::ParityOmegaDistinct, TableMode::OmegaValue]
            .into_iter()
            .find(|m| specs.iter().all(|s| m.supports(s)))
    }

    pub fn name(self) -> &'static str {
        match self {
            TableMode::ParityNMinusOmega => "parity-n-minus-omega",
            TableMode::ParityOmegaDistinct => "parity-omega-distinct",
            TableMode::OmegaValue => "omega-value",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [TableMode::ParityNMinusOmega, TableMode::ParityOmegaDistinct, TableMode::OmegaValue]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[inline]
pub(crate) fn is_coprime30(n: u64) -> bool {
    SLOT[(n % 30) as usize] != u8::MAX
}

#[inline]
fn entry_index(n: u64) -> usize {
    8 * (n / 30) as usize + SLOT[(n % 30) as usize] as usize
}

/// Smallest integer `>= n` coprime to 30.
#[inline]
pub(crate) fn next_coprime30(n: u64) -> u64 {
    if is_coprime30(n) {
        n
    } else {
        n + WHEEL_NEXT[(n % 30) as usize]
    }
}

#[inline]
pub(crate) fn wheel_step(n: u64) -> u64 {
    n + WHEEL_NEXT[(n % 30) as usize]
}

/// Default memory budget for a table payload.
pub const DEFAULT_TABLE_BUDGET: u64 = 4 << 30;

#[derive(Clone, PartialEq, Eq)]
pub struct FactorTable {
    limit: u64,
    mode: TableMode,
    words: Vec<u64>,
}

impl std::fmt::Debug for FactorTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactorTable")
            .field("limit", &self.limit)
            .field("mode", &self.mode)
            .field("entries", &self.entry_count())
            .finish()
    }
}

impl FactorTable {
    fn blank(limit: u64, mode: TableMode, budget: u64) -> Result<Self> {
        if limit < 30 {
            return Err(Error::TableTooSmall(limit));
        }
        if mode == TableMode::OmegaValue && limit >= 7u64.pow(15) {
            // entries could saturate the 4-bit field
            return Err(Error::MemoryBudget { limit, needed: u64::MAX, budget });
        }
        let entries = 8 * limit.div_ceil(30);
        let bits = entries * mode.bits_per_entry() as u64;
        let needed = bits.div_ceil(64) * 8;
        if needed > budget {
            return Err(Error::MemoryBudget { limit, needed, budget });
        }
        let fill = if mode == TableMode::OmegaValue { u64::MAX } else { 0 };
        Ok(FactorTable { limit, mode, words: vec![fill; (needed / 8) as usize] })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Largest `n` with an entry (the limit rounded up to a block of 30).
    pub fn capacity(&self) -> u64 {
        30 * self.limit.div_ceil(30)
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn entry_count(&self) -> u64 {
        8 * self.limit.div_ceil(30)
    }

    pub fn payload_bytes(&self) -> usize {
        self.words.len() * 8
    }

    #[inline]
    fn raw(&self, idx: usize) -> u64 {
        match self.mode {
            TableMode::OmegaValue => (self.words[idx / 16] >> (4 * (idx % 16))) & 0xF,
            _ => (self.words[idx / 32] >> (2 * (idx % 32))) & 0b11,
        }
    }

    #[inline]
    fn set_raw(&mut self, idx: usize, v: u64) {
        match self.mode {
            TableMode::OmegaValue => {
                let w = &mut self.words[idx / 16];
                let sh = 4 * (idx % 16);
                *w = (*w & !(0xF << sh)) | (v << sh);
            }
            _ => {
                let w = &mut self.words[idx / 32];
                let sh = 2 * (idx % 32);
                *w = (*w & !(0b11 << sh)) | (v << sh);
            }
        }
    }

    #[inline]
    fn is_unknown(&self, idx: usize) -> bool {
        match self.mode {
            TableMode::OmegaValue => self.raw(idx) == UNKNOWN_VALUE,
            _ => self.raw(idx) == 0,
        }
    }

    /// Record `Omega(n)` and `omega(n)` for an odd `n` coprime to 30.
    #[inline]
    fn store(&mut self, n: u64, big: u32, small: u32) {
        let v = match self.mode {
            TableMode::OmegaValue => big as u64,
            // n odd, so n - Omega is even iff Omega is odd
            TableMode::ParityNMinusOmega => 0b10 | (1 ^ (big as u64 & 1)),
            TableMode::ParityOmegaDistinct => 0b10 | (small as u64 & 1),
        };
        self.set_raw(entry_index(n), v);
    }

    /// Mode-specific entry for `n` coprime to 30: a parity bit (0/1) or `Omega(n)`.
    #[inline]
    pub fn entry(&self, n: u64) -> u8 {
        debug_assert!(is_coprime30(n) && n <= self.capacity(), "n = {n}");
        let r = self.raw(entry_index(n));
        match self.mode {
            TableMode::OmegaValue => r as u8,
            _ => (r & 1) as u8,
        }
    }

    /// Parity of `Omega(n)` for `n` coprime to 30 (not available in the omega-distinct mode).
    #[inline]
    pub fn omega_parity(&self, n: u64) -> u32 {
        match self.mode {
            TableMode::ParityNMinusOmega => 1 ^ self.entry(n) as u32,
            TableMode::OmegaValue => self.entry(n) as u32 & 1,
            TableMode::ParityOmegaDistinct => panic!("omega-distinct table has no Omega parity"),
        }
    }

    /// A stable hash of the header and payload.
    pub fn fingerprint(&self) -> u64 {
        let mut h = FnvHasher::default();
        h.write(&self.header());
        for w in &self.words {
            h.write(&w.to_le_bytes());
        }
        h.finish()
    }

    fn header(&self) -> [u8; 16] {
        let mut hdr = [0u8; 16];
        hdr[..4].copy_from_slice(&MAGIC);
        hdr[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        hdr[6] = self.mode.code();
        hdr[8..16].copy_from_slice(&self.limit.to_le_bytes());
        hdr
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&self.header())?;
        for w in &self.words {
            out.write_all(&w.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::TableFile { path: path.to_path_buf(), msg: msg.to_string() };
        let mut input = BufReader::new(File::open(path)?);
        let mut hdr = [0u8; 16];
        input.read_exact(&mut hdr).map_err(|_| bad("truncated header"))?;
        if hdr[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        if u16::from_le_bytes([hdr[4], hdr[5]]) != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        let mode = TableMode::from_code(hdr[6]).ok_or_else(|| bad("unknown mode"))?;
        let limit = u64::from_le_bytes(hdr[8..16].try_into().unwrap());
        let mut table = FactorTable::blank(limit, mode, u64::MAX)?;
        let mut buf = vec![0u8; table.words.len() * 8];
        input.read_exact(&mut buf).map_err(|_| bad("truncated payload"))?;
        if input.read(&mut [0u8; 1])? != 0 {
            return Err(bad("trailing bytes"));
        }
        for (w, chunk) in table.words.iter_mut().zip(buf.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(table)
    }

    /// Compare `count` evenly spaced entries with trial division; returns the first bad `n`.
    pub fn spot_check(&self, count: u64) -> Option<u64> {
        let cap = self.capacity();
        let step = (cap / count.max(1)).max(1);
        (0..count)
            .map(|i| 1 + i * step)
            .filter(|&n| n <= cap)
            .map(|n| {
                let mut n = n;
                while n % 2 == 0 || n % 3 == 0 || n % 5 == 0 {
                    n += 1;
                }
                n
            })
            .filter(|&n| n <= cap)
            .find(|&n| {
                let f = factorize(n);
                let want = match self.mode {
                    TableMode::OmegaValue => f.big_omega() as u8,
                    TableMode::ParityNMinusOmega => ((n - f.big_omega() as u64) & 1) as u8,
                    TableMode::ParityOmegaDistinct => (f.small_omega() & 1) as u8,
                };
                self.entry(n) != want
            })
    }

    /// Read only the header of a table file: `(limit, mode)`.
    pub fn peek_header(path: &Path) -> Result<(u64, TableMode)> {
        let bad = |msg: &str| Error::TableFile { path: path.to_path_buf(), msg: msg.to_string() };
        let mut hdr = [0u8; 16];
        File::open(path)?.read_exact(&mut hdr).map_err(|_| bad("truncated header"))?;
        if hdr[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let mode = TableMode::from_code(hdr[6]).ok_or_else(|| bad("unknown mode"))?;
        Ok((u64::from_le_bytes(hdr[8..16].try_into().unwrap()), mode))
    }
}

/// Build a table for `n <= limit` by doubling from a small seed.
pub fn build_base_table(limit: u64, mode: TableMode) -> Result<FactorTable> {
    build_base_table_with(limit, mode, 1 << 12, DEFAULT_TABLE_BUDGET)
}

/// As [`build_base_table`], seeding `[1, seed]` by trial division and then
/// sieving `[y + 1, 2y]` with primes up to `sqrt(2y)`, looking cofactors up in
/// the finished part `[1, y]`.
pub fn build_base_table_with(limit: u64, mode: TableMode, seed: u64, budget: u64) -> Result<FactorTable> {
    let mut table = FactorTable::blank(limit, mode, budget)?;
    let cap = table.capacity();
    let seed = seed.clamp(30, cap);
    let mut n = 1;
    while n <= seed {
        let f = factorize(n);
        table.store(n, f.big_omega(), f.small_omega());
        n = wheel_step(n);
    }
    let primes: Vec<u64> = primes_up_to((cap as f64).sqrt() as u64 + 1).into_iter().filter(|&p| p >= 7).collect();
    let mut y = seed;
    while y < cap {
        let hi = (2 * y).min(cap);
        let root = isqrt(hi);
        for &p in primes.iter().take_while(|&&p| p <= root) {
            // multiples p*m in (y, hi] with m coprime to 30
            let mut m = next_coprime30(y / p + 1);
            while p * m <= hi {
                let n = p * m;
                let idx = entry_index(n);
                if table.is_unknown(idx) {
                    let (mut c, mut e) = (m, 1);
                    while c % p == 0 {
                        c /= p;
                        e += 1;
                    }
                    let (cb, cs) = table.omegas_of(c);
                    table.store(n, cb + e, cs + 1);
                }
                m = wheel_step(m);
            }
        }
        // what is left in (y, hi] is prime
        let mut n = next_coprime30(y + 1);
        while n <= hi {
            if table.is_unknown(entry_index(n)) {
                table.store(n, 1, 1);
            }
            n = wheel_step(n);
        }
        y = hi;
    }
    Ok(table)
}

impl FactorTable {
    /// `(Omega, omega)` as far as the mode can tell; the field the mode lacks
    /// is only right modulo 2 or not at all, and callers only read what they stored.
    #[inline]
    fn omegas_of(&self, c: u64) -> (u32, u32) {
        if c == 1 {
            return (0, 0);
        }
        match self.mode {
            TableMode::OmegaValue => (self.entry(c) as u32, 0),
            TableMode::ParityNMinusOmega => (self.omega_parity(c), 0),
            TableMode::ParityOmegaDistinct => (0, self.entry(c) as u32),
        }
    }
}

#[inline]
pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{big_omega, small_omega};

    #[test]
    fn smallest_table() {
        for mode in [TableMode::ParityNMinusOmega, TableMode::ParityOmegaDistinct, TableMode::OmegaValue] {
            let t = build_base_table(30, mode).unwrap();
            assert_eq!(t.entry_count(), 8);
            for r in RESIDUES {
                let want = match mode {
                    TableMode::OmegaValue => big_omega(r) as u8,
                    TableMode::ParityNMinusOmega => ((r - big_omega(r) as u64) & 1) as u8,
                    TableMode::ParityOmegaDistinct => (small_omega(r) & 1) as u8,
                };
                assert_eq!(t.entry(r), want, "{mode:?} n = {r}");
            }
        }
        assert!(matches!(build_base_table(29, TableMode::OmegaValue), Err(Error::TableTooSmall(29))));
    }

    #[test]
    fn parity_table_matches_oracle_to_1e6() {
        let t = build_base_table(1_000_000, TableMode::ParityNMinusOmega).unwrap();
        let mut n = 1;
        while n <= 1_000_000 {
            assert_eq!(t.entry(n) as u64, (n - big_omega(n) as u64) & 1, "n = {n}");
            n = wheel_step(n);
        }
    }

    #[test]
    fn omega_value_and_distinct_tables() {
        let t = build_base_table(1_000_000, TableMode::OmegaValue).unwrap();
        assert_eq!(t.entry(823_543), 7);
        let d = build_base_table(200_000, TableMode::ParityOmegaDistinct).unwrap();
        let mut n = 1;
        while n <= 200_000 {
            assert_eq!(t.entry(n) as u32, big_omega(n));
            assert_eq!(d.entry(n) as u32, small_omega(n) & 1);
            n = wheel_step(n);
        }
    }

    #[test]
    fn schedule_independent_payload() {
        let a = build_base_table_with(300_000, TableMode::ParityNMinusOmega, 30, u64::MAX).unwrap();
        let b = build_base_table_with(300_000, TableMode::ParityNMinusOmega, 7_777, u64::MAX).unwrap();
        let c = build_base_table_with(300_000, TableMode::ParityNMinusOmega, 300_000, u64::MAX).unwrap();
        assert_eq!(a.words, b.words);
        assert_eq!(a.words, c.words);
        assert_eq!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn memory_budget_enforced() {
        let e = build_base_table_with(1_000_000, TableMode::OmegaValue, 30, 1000).unwrap_err();
        assert!(matches!(e, Error::MemoryBudget { .. }));
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = std::env::temp_dir().join(format!("osx-table-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.bin");
        let t = build_base_table(10_000, TableMode::OmegaValue).unwrap();
        t.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16 + t.payload_bytes());
        assert_eq!(&bytes[..4], b"OSXT");
        let u = FactorTable::load(&path).unwrap();
        assert_eq!(t, u);
        assert_eq!(FactorTable::peek_header(&path).unwrap(), (10_000, TableMode::OmegaValue));
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(FactorTable::load(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn spot_check_catches_corruption() {
        for mode in [TableMode::ParityNMinusOmega, TableMode::ParityOmegaDistinct, TableMode::OmegaValue] {
            let mut t = build_base_table(100_000, mode).unwrap();
            assert_eq!(t.spot_check(10_000), None);
            let i = entry_index(49);
            let r = t.raw(i);
            t.set_raw(i, if mode == TableMode::OmegaValue { r + 1 } else { r ^ 1 });
            assert_eq!(t.spot_check(100_000), Some(49));
        }
    }
}
