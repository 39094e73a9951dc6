//! Packed bit storage shared by strings and site sequences.
//!
//! Bits are stored little-endian within machine words: bit `i` lives in word
//! `i / WORD_BITS` at position `i % WORD_BITS`. Bits at or beyond `len` are
//! always zero.

use alloc::vec;
use alloc::vec::Vec;

pub type Word = u64;

/// Width of [`Word`] in bits.
pub const WORD_BITS: usize = Word::BITS as usize;

/// Every even bit position of a word set.
pub(crate) const EVEN_BITS: Word = Word::MAX / 3;
/// Every odd bit position of a word set.
pub(crate) const ODD_BITS: Word = EVEN_BITS << 1;

#[inline]
pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// Mask with the low `bits` bits set (`bits <= WORD_BITS`).
#[inline]
pub(crate) fn low_mask(bits: usize) -> Word {
    if bits >= WORD_BITS {
        Word::MAX
    } else {
        (1 << bits) - 1
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PackedBits {
    words: Vec<Word>,
    len: usize,
}

impl PackedBits {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; words_for(len)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut out = Self { words: vec![Word::MAX; words_for(len)], len };
        out.clear_tail();
        out
    }

    /// Builds from raw words, truncating to `len` bits.
    pub fn from_words(mut words: Vec<Word>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        let mut out = Self { words, len };
        out.clear_tail();
        out
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::default();
        for b in bits {
            out.push(b);
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    #[inline]
    pub(crate) fn words_mut(&mut self) -> &mut [Word] {
        &mut self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub(crate) fn flip(&mut self, i: usize) {
        self.words[i / WORD_BITS] ^= 1 << (i % WORD_BITS);
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of set bits at positions `from..to`.
    pub fn count_ones_range(&self, from: usize, to: usize) -> usize {
        let to = to.min(self.len);
        if from >= to {
            return 0;
        }
        let (first, last) = (from / WORD_BITS, (to - 1) / WORD_BITS);
        let mut total = 0;
        for k in first..=last {
            let mut w = self.words[k];
            if k == first {
                w &= !low_mask(from % WORD_BITS);
            }
            if k == last {
                w &= low_mask(to - last * WORD_BITS);
            }
            total += w.count_ones() as usize;
        }
        total
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Positions of set bits, ascending.
    pub fn ones_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| SetBits(w).map(move |b| k * WORD_BITS + b))
    }

    /// First `len` bits.
    pub fn prefix(&self, len: usize) -> Self {
        let len = len.min(self.len);
        Self::from_words(self.words[..words_for(len)].to_vec(), len)
    }

    /// Bitwise complement within `len`.
    pub fn complement(&self) -> Self {
        let words = self.words.iter().map(|w| !w).collect();
        Self::from_words(words, self.len)
    }

    /// Bit order reversed.
    pub fn reversed(&self) -> Self {
        let mut out = Self::zeros(self.len);
        for i in self.ones_positions() {
            out.set(self.len - 1 - i, true);
        }
        out
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= low_mask(rem);
            }
        }
    }
}

impl core::fmt::Debug for PackedBits {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("PackedBits(")?;
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

/// Reads the `WORD_BITS` bits of `src` starting at (possibly negative) bit
/// position `start`; positions outside `src` read as zero.
#[inline]
pub(crate) fn read_word_at(src: &[Word], start: isize) -> Word {
    let word_bits = WORD_BITS as isize;
    let k = start.div_euclid(word_bits);
    let off = start.rem_euclid(word_bits) as u32;
    let fetch = |idx: isize| -> Word {
        if idx >= 0 && (idx as usize) < src.len() {
            src[idx as usize]
        } else {
            0
        }
    };
    if off == 0 {
        fetch(k)
    } else {
        (fetch(k) >> off) | (fetch(k + 1) << (WORD_BITS as u32 - off))
    }
}

/// Iterator over set bit positions of one word.
pub(crate) struct SetBits(pub Word);

impl Iterator for SetBits {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_bits_stay_clear() {
        let b = PackedBits::ones(70);
        assert_eq!(b.words()[1], 0b11_1111);
        assert_eq!(b.complement().count_ones(), 0);
        assert_eq!(PackedBits::from_words(vec![Word::MAX; 3], 65).count_ones(), 65);
    }

    #[test]
    fn read_word_at_handles_offsets() {
        let src = [0xF0F0_F0F0_F0F0_F0F0u64, 0x1];
        assert_eq!(read_word_at(&src, 0), src[0]);
        assert_eq!(read_word_at(&src, 4), 0x1F0F_0F0F_0F0F_0F0F);
        assert_eq!(read_word_at(&src, -4), 0x0F0F_0F0F_0F0F_0F00);
        assert_eq!(read_word_at(&src, 64), 1);
        assert_eq!(read_word_at(&src, 200), 0);
    }

    #[test]
    fn count_range_matches_naive() {
        let b = PackedBits::from_bools((0..300).map(|i| (i * 7 + i / 5) % 3 == 0));
        for (from, to) in [(0, 300), (3, 64), (63, 65), (64, 128), (100, 299), (10, 10), (250, 400)] {
            let naive = (from..to.min(300)).filter(|&i| b.get(i)).count();
            assert_eq!(b.count_ones_range(from, to), naive, "{from}..{to}");
        }
    }

    #[test]
    fn reversal_and_prefix() {
        let b = PackedBits::from_bools([true, false, false, true, true]);
        assert_eq!(b.reversed(), PackedBits::from_bools([true, true, false, false, true]));
        assert_eq!(b.prefix(2), PackedBits::from_bools([true, false]));
        assert_eq!(b.ones_positions().collect::<Vec<_>>(), vec![0, 3, 4]);
    }
}
