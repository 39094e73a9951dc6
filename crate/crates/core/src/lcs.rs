//! Binary strings and LCS length engines.
//!
//! Text form uses `0`/`1`; the letters `O`/`I` (any case) are accepted as
//! `O ↦ 0`, `I ↦ 1`, so figure strings such as `IOOO` parse directly.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::bits::{low_mask, PackedBits, Word, WORD_BITS};
use crate::rng::{Seed, SplitMix64};
use crate::{Error, Result};

/// Largest shorter side accepted by [`lcs_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BinaryString {
    bits: PackedBits,
}

impl BinaryString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: PackedBits) -> Self {
        Self { bits }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self { bits: PackedBits::from_bools(bits) }
    }

    /// Parses `0`/`1`/`O`/`I` (case-insensitive for the letters).
    pub fn parse(text: &str) -> Result<Self> {
        let mut bits = PackedBits::default();
        for (index, c) in text.chars().enumerate() {
            match c {
                '0' | 'O' | 'o' => bits.push(false),
                '1' | 'I' | 'i' => bits.push(true),
                found => return Err(Error::InvalidCharacter { index, found }),
            }
        }
        Ok(Self { bits })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits.get(i)
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn bits(&self) -> &PackedBits {
        &self.bits
    }

    pub fn words(&self) -> &[Word] {
        self.bits.words()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self { bits: self.bits.prefix(len) }
    }

    pub fn complement(&self) -> Self {
        Self { bits: self.bits.complement() }
    }

    /// Renders with the `O`/`I` alphabet.
    pub fn to_oi(&self) -> String {
        self.iter().map(|b| if b { 'I' } else { 'O' }).collect()
    }
}

impl FromStr for BinaryString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    Dp,
    BitParallel,
    BruteForce,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Dp => "dp",
            Engine::BitParallel => "bitparallel",
            Engine::BruteForce => "bruteforce",
        }
    }
}

impl FromStr for Engine {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        match s {
            "dp" => Ok(Engine::Dp),
            "bitparallel" | "bit-parallel" => Ok(Engine::BitParallel),
            "bruteforce" | "brute-force" => Ok(Engine::BruteForce),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LcsResult {
    pub length: usize,
    pub engine: Engine,
}

pub fn lcs(a: &BinaryString, b: &BinaryString, engine: Engine) -> Result<LcsResult> {
    match engine {
        Engine::Dp => Ok(lcs_dp(a, b)),
        Engine::BitParallel => Ok(lcs_bitparallel(a, b)),
        Engine::BruteForce => lcs_bruteforce(a, b),
    }
}

/// Classical row-by-row dynamic programme, one row of `min(m, n) + 1` cells.
pub fn lcs_dp(a: &BinaryString, b: &BinaryString) -> LcsResult {
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let inner: Vec<bool> = inner.iter().collect();
    let mut row = vec![0u32; inner.len() + 1];
    for x in outer.iter() {
        let mut diag = 0;
        for (j, &y) in inner.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    LcsResult { length: row[inner.len()] as usize, engine: Engine::Dp }
}

/// Word-parallel LCS (Allison–Dix / Hyyrö recurrence).
///
/// The bit vector `V` holds the vertical-edge sites of the current grid
/// column: a set bit is a particle still travelling right, a clear bit is a
/// particle that has left through the bottom. Feeding one character of `b`
/// applies the column's comparators at once:
/// `V ← (V + (V & M)) | (V & !M)`, with `M` the match mask of that character
/// against `a`. The carry chain is exactly the transposition network's
/// particle routing, so the answer is `m - popcount(V)`.
pub fn lcs_bitparallel(a: &BinaryString, b: &BinaryString) -> LcsResult {
    let m = a.len();
    if m == 0 || b.is_empty() {
        return LcsResult { length: 0, engine: Engine::BitParallel };
    }
    let words = a.words().len();
    let tail = low_mask(m - (words - 1) * WORD_BITS);
    let match_one: Vec<Word> = a.words().to_vec();
    let mut match_zero: Vec<Word> = a.words().iter().map(|w| !w).collect();
    match_zero[words - 1] &= tail;

    let mut v: Vec<Word> = vec![Word::MAX; words];
    v[words - 1] = tail;
    for bit in b.iter() {
        let mask = if bit { &match_one } else { &match_zero };
        let mut carry = false;
        for k in 0..words {
            let vk = v[k];
            let u = vk & mask[k];
            let (s1, c1) = vk.overflowing_add(u);
            let (s2, c2) = s1.overflowing_add(carry as Word);
            carry = c1 | c2;
            v[k] = s2 | (vk & !mask[k]);
        }
        v[words - 1] &= tail;
    }
    let ones: usize = v.iter().map(|w| w.count_ones() as usize).sum();
    LcsResult { length: m - ones, engine: Engine::BitParallel }
}

/// Exhaustive oracle: tries subsequences of the shorter string, longest first.
pub fn lcs_bruteforce(a: &BinaryString, b: &BinaryString) -> Result<LcsResult> {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let k = short.len();
    if k > BRUTE_FORCE_LIMIT {
        return Err(Error::BruteForceTooLarge { min_side: k, limit: BRUTE_FORCE_LIMIT });
    }
    let short: Vec<bool> = short.iter().collect();
    let long: Vec<bool> = long.iter().collect();
    let mut best = 0;
    for mask in 0u32..(1u32 << k) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut pos = 0;
        let mut ok = true;
        for (i, &c) in short.iter().enumerate() {
            if mask >> i & 1 == 0 {
                continue;
            }
            match long[pos..].iter().position(|&x| x == c) {
                Some(off) => pos += off + 1,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            best = size;
        }
    }
    Ok(LcsResult { length: best, engine: Engine::BruteForce })
}

/// `n` uniform bits drawn from the given stream.
pub fn random_string(n: usize, seed: Seed) -> BinaryString {
    random_from(&mut seed.rng(), n)
}

/// Two consecutive strings from one stream: `a` first, then `b`.
pub fn random_pair(m: usize, n: usize, seed: Seed) -> (BinaryString, BinaryString) {
    let mut rng = seed.rng();
    let a = random_from(&mut rng, m);
    let b = random_from(&mut rng, n);
    (a, b)
}

pub(crate) fn random_from(rng: &mut SplitMix64, n: usize) -> BinaryString {
    let words = (0..n.div_ceil(WORD_BITS)).map(|_| rng.next_u64()).collect();
    BinaryString::from_bits(PackedBits::from_words(words, n))
}
