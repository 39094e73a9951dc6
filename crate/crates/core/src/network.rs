//! The LCS grid as a transposition network.
//!
//! Wires run diagonally from above-left to below-right. Wires entering
//! through the top boundary carry indices `0, 1, 2, …` and wires entering
//! through the left boundary `-1, -2, …`, both counted from the top-left
//! cell. Cell `(i, j)` (row `i` of `a`, column `j` of `b`) joins its left and
//! bottom edges on wire `j - i - 1` and its top and right edges on wire
//! `j - i`; it is a mismatch cell, holding a comparator, iff `a_i != b_j`.
//!
//! With the step initial condition (particles on negative wires, holes on
//! nonnegative ones) the only comparator that ever acts is a mismatch cell
//! whose lower wire holds a particle and whose upper wire holds a hole: the
//! two values are exchanged and the particle moves up one wire.
//!
//! Diagonal evolution processes anti-diagonal `d = i + j` in half-step `d`.
//! Half-step `d` therefore acts on wire pairs `(w, w + 1)` with
//! `w ≡ d - 1 (mod 2)`: odd/even pairs first, then even/odd. After `n` time
//! steps (`2n` half-steps) the sites along the anti-diagonal through node
//! `(n, n)` are the state.
//!
//! Site values are packed one bit per wire and updated a machine word at a
//! time.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::{read_word_at, PackedBits, SetBits, Word, EVEN_BITS, ODD_BITS, WORD_BITS};
use crate::lcs::{lcs_dp, random_pair, BinaryString};
use crate::rng::{counter_unit, Seed};
use crate::stats::chi_square_uniform;
use crate::{Error, Result};

/// Cell type from a pair of characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellType {
    Match = 0,
    Mismatch = 1,
}

impl CellType {
    #[inline]
    pub fn value(self) -> u8 {
        self as u8
    }
}

#[inline]
pub fn cell_type(a_i: bool, b_j: bool) -> CellType {
    if a_i == b_j {
        CellType::Match
    } else {
        CellType::Mismatch
    }
}

/// Values on a contiguous window of wires at one moment of the evolution.
///
/// Array position `p` holds wire `origin_index + p`; `true` is a particle.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SiteSequence {
    values: PackedBits,
    origin_index: i64,
    halfstep: u64,
}

impl SiteSequence {
    pub fn new(values: PackedBits, origin_index: i64, halfstep: u64) -> Self {
        Self { values, origin_index, halfstep }
    }

    /// Step initial condition on wires `-below..above`.
    pub fn step_initial(below: usize, above: usize) -> Self {
        let mut values = PackedBits::zeros(below + above);
        for p in 0..below {
            values.set(p, true);
        }
        Self { values, origin_index: -(below as i64), halfstep: 0 }
    }

    pub fn values(&self) -> &PackedBits {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut PackedBits {
        &mut self.values
    }

    pub fn origin_index(&self) -> i64 {
        self.origin_index
    }

    pub fn halfstep(&self) -> u64 {
        self.halfstep
    }

    pub(crate) fn set_halfstep(&mut self, halfstep: u64) {
        self.halfstep = halfstep;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One past the highest wire index in the window.
    pub fn end_index(&self) -> i64 {
        self.origin_index + self.values.len() as i64
    }

    /// Value on wire `w`, if the window covers it.
    pub fn wire(&self, w: i64) -> Option<bool> {
        let p = w - self.origin_index;
        (p >= 0 && (p as usize) < self.len()).then(|| self.values.get(p as usize))
    }

    pub fn particles(&self) -> usize {
        self.values.count_ones()
    }

    pub fn holes(&self) -> usize {
        self.len() - self.particles()
    }

    /// Particles on wires with index `>= w`.
    pub fn particles_at_or_above(&self, w: i64) -> usize {
        let from = (w - self.origin_index).clamp(0, self.len() as i64) as usize;
        self.values.count_ones_range(from, self.len())
    }

    /// `*` for particles, `.` for holes, lowest wire first.
    pub fn render(&self) -> String {
        self.values.iter().map(|b| if b { '*' } else { '.' }).collect()
    }
}

/// Reflection about the main diagonal with particles and holes exchanged.
///
/// Wire `w` maps to `-1 - w`, which reverses the window and swaps the
/// parity of every index; the half-step count is unchanged.
pub fn dualize(s: &SiteSequence) -> SiteSequence {
    SiteSequence {
        values: s.values.reversed().complement(),
        origin_index: -s.end_index(),
        halfstep: s.halfstep,
    }
}

/// Decides which candidate comparators fire in a half-step.
pub trait CellRule {
    /// Lowest and highest lower-wire index of a cell active in half-step `d`,
    /// before clipping to the window. `None` if no cell is active.
    fn lower_range(&self, d: u64) -> Option<(i64, i64)>;

    /// `candidates` holds, for window words starting at `first_word`, the
    /// lower sites of active pairs entered as (particle, hole). Clear every
    /// bit whose cell is a match.
    fn filter(&mut self, d: u64, origin_index: i64, first_word: usize, candidates: &mut [Word]);
}

/// Cell types from character matches of a finite string pair.
pub struct StringPairRule {
    /// `a` reversed and spread to even positions: bit `2(m-1-i)` is `a_i`.
    a_spread: Vec<Word>,
    /// `b` spread to even positions: bit `2j` is `b_j`.
    b_spread: Vec<Word>,
    rows: i64,
    cols: i64,
}

impl StringPairRule {
    pub fn new(a: &BinaryString, b: &BinaryString) -> Self {
        let spread = |len: usize, bit_at: &dyn Fn(usize) -> bool| {
            let mut bits = PackedBits::zeros(2 * len);
            for k in 0..len {
                if bit_at(k) {
                    bits.set(2 * k, true);
                }
            }
            bits.words().to_vec()
        };
        let m = a.len();
        Self {
            a_spread: spread(m, &|k| a.get(m - 1 - k)),
            b_spread: spread(b.len(), &|k| b.get(k)),
            rows: m as i64,
            cols: b.len() as i64,
        }
    }
}

impl CellRule for StringPairRule {
    fn lower_range(&self, d: u64) -> Option<(i64, i64)> {
        let d = d as i64;
        // 0 <= i < rows, 0 <= j < cols with i = (d-1-w)/2, j = (d+1+w)/2.
        let lo = (-d - 1).max(d + 1 - 2 * self.rows);
        let hi = (d - 1).min(2 * self.cols - 3 - d);
        (lo <= hi).then_some((lo, hi))
    }

    fn filter(&mut self, d: u64, origin_index: i64, first_word: usize, candidates: &mut [Word]) {
        let d = d as i64;
        // Window position p reads a-spread bit p - shift_a and b-spread bit p - shift_b.
        let shift_a = d + 1 - 2 * self.rows - origin_index;
        let shift_b = -d - 1 - origin_index;
        for (k, c) in candidates.iter_mut().enumerate() {
            if *c == 0 {
                continue;
            }
            let start = ((first_word + k) * WORD_BITS) as i64;
            let a = read_word_at(&self.a_spread, (start - shift_a) as isize);
            let b = read_word_at(&self.b_spread, (start - shift_b) as isize);
            *c &= a ^ b;
        }
    }
}

/// Independent Bernoulli cells: a (particle, hole) entry exchanges with
/// probability `rate`, decided by a coin keyed on `(half-step, lower wire)`.
pub struct BernoulliRule {
    pub key: u64,
    pub rate: f64,
}

impl CellRule for BernoulliRule {
    fn lower_range(&self, d: u64) -> Option<(i64, i64)> {
        let d = d as i64;
        Some((-d - 1, d - 1))
    }

    fn filter(&mut self, d: u64, origin_index: i64, first_word: usize, candidates: &mut [Word]) {
        for (k, c) in candidates.iter_mut().enumerate() {
            let mut keep = 0;
            for bit in SetBits(*c) {
                let w = origin_index + ((first_word + k) * WORD_BITS + bit) as i64;
                if counter_unit(self.key, d, w as u64) < self.rate {
                    keep |= 1 << bit;
                }
            }
            *c = keep;
        }
    }
}

/// Diagonal evolution of a window under a cell rule.
pub struct DiagonalEvolution<R> {
    state: SiteSequence,
    rule: R,
    exchanges: Vec<Word>,
}

impl<R: CellRule> DiagonalEvolution<R> {
    pub fn new(state: SiteSequence, rule: R) -> Self {
        let words = state.values.words().len();
        Self { state, rule, exchanges: vec![0; words] }
    }

    pub fn state(&self) -> &SiteSequence {
        &self.state
    }

    pub fn into_state(self) -> SiteSequence {
        self.state
    }

    /// Applies one half-step; returns the number of exchanges.
    pub fn halfstep(&mut self) -> usize {
        let d = self.state.halfstep;
        self.state.halfstep += 1;
        let origin = self.state.origin_index;
        let len = self.state.len() as i64;
        let Some((lo, hi)) = self.rule.lower_range(d) else {
            return 0;
        };
        // A pair needs both wires inside the window.
        let lo_p = (lo - origin).max(0);
        let hi_p = (hi - origin).min(len - 2);
        if lo_p > hi_p {
            return 0;
        }
        let (lo_p, hi_p) = (lo_p as usize, hi_p as usize);
        let (first, last) = (lo_p / WORD_BITS, hi_p / WORD_BITS);
        // Lower positions p with p + origin ≡ d - 1 (mod 2).
        let parity = if (d as i64 - 1 - origin).rem_euclid(2) == 0 { EVEN_BITS } else { ODD_BITS };

        let words = self.state.values.words();
        let cand = &mut self.exchanges[first..=last];
        for (k, c) in cand.iter_mut().enumerate() {
            let wi = first + k;
            let mut mask = parity;
            if wi == first {
                mask &= Word::MAX << (lo_p % WORD_BITS);
            }
            if wi == last {
                mask &= Word::MAX >> (WORD_BITS - 1 - hi_p % WORD_BITS);
            }
            let next = read_word_at(words, (wi * WORD_BITS + 1) as isize);
            *c = words[wi] & !next & mask;
        }
        self.rule.filter(d, origin, first, cand);

        let values = self.state.values.words_mut();
        let mut count = 0;
        for (k, &x) in cand.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let wi = first + k;
            count += x.count_ones() as usize;
            values[wi] ^= x ^ (x << 1);
            let spill = x >> (WORD_BITS - 1);
            if spill != 0 {
                values[wi + 1] ^= spill;
            }
        }
        count
    }

    pub fn run_halfsteps(&mut self, count: u64) -> usize {
        (0..count).map(|_| self.halfstep()).sum()
    }
}

fn check_lengths(a: &BinaryString, b: &BinaryString, n: usize) -> Result<()> {
    let shortest = a.len().min(b.len());
    if shortest < n {
        return Err(Error::StringTooShort { needed: n, got: shortest });
    }
    Ok(())
}

/// Model CS from step initial condition after `n` diagonal time steps.
///
/// Simulates every cell `(i, j)` with `i < |a|`, `j < |b|`, `i + j < 2n`, on
/// the wires `-min(|a|, 2n)..min(|b|, 2n)`; no other wire can change, so the
/// result is exact. Both strings need at least `n` characters.
pub fn evolve_step_ic(a: &BinaryString, b: &BinaryString, n: usize) -> Result<SiteSequence> {
    check_lengths(a, b, n)?;
    let mut evo = step_ic_evolution(a, b, n);
    evo.run_halfsteps(2 * n as u64);
    Ok(evo.into_state())
}

fn step_ic_evolution(a: &BinaryString, b: &BinaryString, n: usize) -> DiagonalEvolution<StringPairRule> {
    let (rows, cols) = (a.len().min(2 * n), b.len().min(2 * n));
    let rule = StringPairRule::new(&a.prefix(rows), &b.prefix(cols));
    DiagonalEvolution::new(SiteSequence::step_initial(rows, cols), rule)
}

/// Like [`evolve_step_ic`], recording the window after every half-step
/// (the initial state first).
pub fn evolve_step_ic_traced(a: &BinaryString, b: &BinaryString, n: usize) -> Result<Vec<SiteSequence>> {
    check_lengths(a, b, n)?;
    let mut evo = step_ic_evolution(a, b, n);
    let mut out = Vec::with_capacity(2 * n + 1);
    out.push(evo.state().clone());
    for _ in 0..2 * n {
        evo.halfstep();
        out.push(evo.state().clone());
    }
    Ok(out)
}

/// One line per state, `.` hole and `*` particle, lowest wire first.
pub fn trace_lines(a: &BinaryString, b: &BinaryString, n: usize) -> Result<Vec<String>> {
    Ok(evolve_step_ic_traced(a, b, n)?.iter().map(SiteSequence::render).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossingReport {
    pub n: usize,
    pub k: usize,
    /// LCS length of `a[..k]` and `b[..2n - k]`.
    pub l: usize,
    /// Particles on wires `>= 2n - 2k` after `n` steps.
    pub particles_at_or_above: usize,
}

impl CrossingReport {
    /// The crossing count equals `k - l`.
    pub fn holds(&self) -> bool {
        self.particles_at_or_above + self.l == self.k
    }
}

fn check_split(a: &BinaryString, b: &BinaryString, n: usize, k: usize) -> Result<()> {
    if k > 2 * n {
        return Err(Error::OutOfRange { what: "k", value: k as i64, min: 0, max: 2 * n as i64 });
    }
    if a.len() < k {
        return Err(Error::StringTooShort { needed: k, got: a.len() });
    }
    if b.len() < 2 * n - k {
        return Err(Error::StringTooShort { needed: 2 * n - k, got: b.len() });
    }
    Ok(())
}

fn report_from(state: &SiteSequence, a: &BinaryString, b: &BinaryString, n: usize, k: usize) -> CrossingReport {
    let threshold = 2 * n as i64 - 2 * k as i64;
    CrossingReport {
        n,
        k,
        l: lcs_dp(&a.prefix(k), &b.prefix(2 * n - k)).length,
        particles_at_or_above: state.particles_at_or_above(threshold),
    }
}

/// Particle count above the split `k` after `n` steps, with its LCS witness.
pub fn crossing_report(a: &BinaryString, b: &BinaryString, n: usize, k: usize) -> Result<CrossingReport> {
    check_split(a, b, n, k)?;
    let state = evolve_step_ic(a, b, n)?;
    Ok(report_from(&state, a, b, n, k))
}

/// Reports for every split `k` the strings can support, from one evolution.
pub fn crossing_reports(a: &BinaryString, b: &BinaryString, n: usize) -> Result<Vec<CrossingReport>> {
    let state = evolve_step_ic(a, b, n)?;
    Ok((0..=2 * n)
        .filter(|&k| check_split(a, b, n, k).is_ok())
        .map(|k| report_from(&state, a, b, n, k))
        .collect())
}

/// Runs the whole `m × n` network and counts particles leaving through the
/// bottom boundary, i.e. on the lowest `n` wires.
pub fn bottom_output_particles(a: &BinaryString, b: &BinaryString) -> usize {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return 0;
    }
    let mut evo = DiagonalEvolution::new(SiteSequence::step_initial(m, n), StringPairRule::new(a, b));
    evo.run_halfsteps((m + n - 1) as u64);
    evo.state().values().count_ones_range(0, n)
}

/// Chi-square comparison of an empirical joint type distribution with the
/// uniform one.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTypeStat {
    pub cells: Vec<(usize, usize)>,
    /// Indexed by the types read as a binary number, first cell most significant.
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub dof: u32,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    pub trials: u64,
    pub n: usize,
    pub triples: Vec<JointTypeStat>,
    /// The 2×2 block at the top-left corner; its fourth type is forced.
    pub block: JointTypeStat,
    /// Fraction of samples where the block's fourth type equals the XOR of the other three.
    pub block_determined_fraction: f64,
    pub parity_blocks_checked: u64,
    pub parity_violations: u64,
}

/// Triples of distinct cells whose types are tested for independence.
pub const INDEPENDENCE_TRIPLES: [[(usize, usize); 3]; 6] = [
    [(0, 0), (0, 1), (0, 2)],
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (0, 1), (1, 0)],
    [(0, 1), (1, 0), (1, 1)],
    [(0, 0), (1, 1), (2, 2)],
    [(0, 2), (1, 0), (2, 1)],
];

pub const INDEPENDENCE_MIN_TRIALS: u64 = 10_000;

/// Samples `trials` string pairs of length `n` and tests cell-type
/// independence for [`INDEPENDENCE_TRIPLES`], the forced fourth type of a
/// 2×2 block, and even parity of every 2×2 block.
pub fn independence_test(trials: u64, n: usize, master: u64) -> Result<IndependenceReport> {
    if trials < INDEPENDENCE_MIN_TRIALS {
        return Err(Error::OutOfRange {
            what: "trials",
            value: trials as i64,
            min: INDEPENDENCE_MIN_TRIALS as i64,
            max: i64::MAX,
        });
    }
    if n < 3 {
        return Err(Error::OutOfRange { what: "n", value: n as i64, min: 3, max: i64::MAX });
    }
    let block_cells = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut triple_counts = vec![[0u64; 8]; INDEPENDENCE_TRIPLES.len()];
    let mut block_counts = [0u64; 16];
    let mut determined = 0u64;
    let mut checked = 0u64;
    let mut violations = 0u64;
    for t in 0..trials {
        let (a, b) = random_pair(n, n, Seed::new(master, t));
        let ty = |(i, j): (usize, usize)| cell_type(a.get(i), b.get(j)).value() as usize;
        for (counts, triple) in triple_counts.iter_mut().zip(INDEPENDENCE_TRIPLES.iter()) {
            let idx = triple.iter().fold(0, |acc, &c| acc << 1 | ty(c));
            counts[idx] += 1;
        }
        let types: Vec<usize> = block_cells.iter().map(|&c| ty(c)).collect();
        block_counts[types.iter().fold(0, |acc, &v| acc << 1 | v)] += 1;
        if types[3] == types[0] ^ types[1] ^ types[2] {
            determined += 1;
        }
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                checked += 1;
                let sum = ty((i, j)) + ty((i, j + 1)) + ty((i + 1, j)) + ty((i + 1, j + 1));
                if sum % 2 != 0 {
                    violations += 1;
                }
            }
        }
    }
    let stat = |cells: &[(usize, usize)], counts: &[u64]| {
        let (chi_square, dof, p_value) = chi_square_uniform(counts);
        JointTypeStat { cells: cells.to_vec(), counts: counts.to_vec(), chi_square, dof, p_value }
    };
    Ok(IndependenceReport {
        trials,
        n,
        triples: INDEPENDENCE_TRIPLES.iter().zip(&triple_counts).map(|(c, k)| stat(c, k)).collect(),
        block: stat(&block_cells, &block_counts),
        block_determined_fraction: determined as f64 / trials as f64,
        parity_blocks_checked: checked,
        parity_violations: violations,
    })
}
