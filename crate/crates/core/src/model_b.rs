//! Model B: every cell is a mismatch independently of everything else, i.e.
//! discrete-time TASEP with sublattice-parallel update.
//!
//! A cell's type only matters when its entry pair is (particle, hole); the
//! rate `p2` governs that case. The pseudo-rates `p0 = p3` and `p1` give the
//! mismatch probability for the other entry pairs and never change values.
//! Entry pairs are numbered as two-digit binary numbers, lower wire first:
//! `0 = (hole, hole)`, `1 = (hole, particle)`, `2 = (particle, hole)`,
//! `3 = (particle, particle)`.
//!
//! Stationary runs use a periodic ring of even length with wire index equal
//! to array position. Half-step `h` acts on pairs whose lower site has
//! parity `h + 1`, so half-step 0 pairs (odd, even). The alternating
//! Bernoulli measure puts particles with probability `u` on the upper sites
//! of the next half-step's pairs and `ū = 1 - u` on the lower ones; at
//! half-step 0 that is `u` on even sites. The roles of even and odd sites
//! swap after every half-step.
//!
//! Each cell draws one coin from [`counter_unit`] keyed by
//! `(key, half-step, lower wire)`. Whether or not cell types are tallied,
//! the same coin decides the exchange, so trajectories are independent of
//! the pseudo-rates and of evaluation order.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::bits::{low_mask, read_word_at, PackedBits, SetBits, Word, EVEN_BITS, ODD_BITS, WORD_BITS};
use crate::network::SiteSequence;
use crate::rng::{counter_unit, Seed, SplitMix64};
use crate::stats::Moments;
use crate::{Error, Result};

fn check_probability(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}

/// Rate `p2` and pseudo-rates `p0 = p3`, `p1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelBParams {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl ModelBParams {
    pub fn new(p2: f64, p0: f64, p1: f64) -> Result<Self> {
        Ok(Self {
            p0: check_probability("p0", p0)?,
            p1: check_probability("p1", p1)?,
            p2: check_probability("p2", p2)?,
            p3: p0,
        })
    }

    /// Plain model B: every cell is a mismatch with probability `p2`.
    pub fn uniform(p2: f64) -> Result<Self> {
        Self::new(p2, p2, p2)
    }

    /// Mismatch probability for an entry pair (see the module docs).
    #[inline]
    pub fn for_entry(&self, entry: usize) -> f64 {
        [self.p0, self.p1, self.p2, self.p3][entry]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryMarginals {
    pub u: f64,
    pub ubar: f64,
}

/// Root in `[0, 1/2]` of `u² = (1 - u)² (1 - p2)`.
pub fn stationary_u(p2: f64) -> Result<StationaryMarginals> {
    let s = sqrt(1.0 - check_probability("p2", p2)?);
    let u = s / (1.0 + s);
    Ok(StationaryMarginals { u, ubar: 1.0 / (1.0 + s) })
}

/// Product measure: particle probability `u` on even positions, `1 - u` on odd.
pub fn sample_stationary(len: usize, u: f64, seed: Seed) -> Result<SiteSequence> {
    if !len.is_multiple_of(2) {
        return Err(Error::OddLength(len));
    }
    check_probability("u", u)?;
    Ok(draw_alternating(&mut seed.rng(), len, u))
}

/// [`sample_stationary`] conditioned on exactly `len / 2` particles, by
/// rejection. On a ring this is exactly invariant for model B, and unlike
/// the product measure it has no density offset from particle-number noise.
pub fn sample_stationary_balanced(len: usize, u: f64, seed: Seed) -> Result<SiteSequence> {
    const MAX_ATTEMPTS: u32 = 100_000;
    if !len.is_multiple_of(2) {
        return Err(Error::OddLength(len));
    }
    check_probability("u", u)?;
    let mut rng = seed.rng();
    for _ in 0..MAX_ATTEMPTS {
        let s = draw_alternating(&mut rng, len, u);
        if s.particles() * 2 == len {
            return Ok(s);
        }
    }
    Err(Error::SamplingExhausted { attempts: MAX_ATTEMPTS })
}

fn draw_alternating(rng: &mut SplitMix64, len: usize, u: f64) -> SiteSequence {
    let values = PackedBits::from_bools((0..len).map(|p| rng.bernoulli(if p % 2 == 0 { u } else { 1.0 - u })));
    SiteSequence::new(values, 0, 0)
}

/// Cell-type counts by entry pair: `counts[entry][type]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TypeTally {
    pub counts: [[u64; 2]; 4],
}

impl TypeTally {
    pub fn cells(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn mismatch_fraction(&self) -> f64 {
        let mism: u64 = self.counts.iter().map(|c| c[1]).sum();
        mism as f64 / self.cells() as f64
    }

    pub fn mismatch_fraction_given(&self, entry: usize) -> f64 {
        let [m, x] = self.counts[entry];
        x as f64 / (m + x) as f64
    }
}

/// Parity mask for positions `p` with `origin + p ≡ parity (mod 2)`.
#[inline]
fn parity_mask(origin: i64, parity: i64) -> Word {
    if (parity - origin).rem_euclid(2) == 0 {
        EVEN_BITS
    } else {
        ODD_BITS
    }
}

/// Word `k` of the ring shifted down by one: bit `p` holds site `p + 1 mod len`.
#[inline]
fn ring_next_word(words: &[Word], len: usize, k: usize) -> Word {
    let mut next = read_word_at(words, (k * WORD_BITS + 1) as isize);
    let last = len - 1;
    if last / WORD_BITS == k {
        let bit = last % WORD_BITS;
        next = (next & !(1 << bit)) | ((words[0] & 1) << bit);
    }
    next
}

#[inline]
fn valid_mask(len: usize, k: usize) -> Word {
    let words = len.div_ceil(WORD_BITS);
    if k + 1 == words {
        low_mask(len - k * WORD_BITS)
    } else {
        Word::MAX
    }
}

/// One half-step of model B on a ring; returns the number of exchanges.
///
/// With `tally`, every active cell's type is drawn and counted; otherwise
/// only (particle, hole) cells are examined. Values evolve identically.
pub fn halfstep(s: &mut SiteSequence, params: &ModelBParams, key: u64, tally: Option<&mut TypeTally>) -> Result<usize> {
    let len = s.len();
    if !len.is_multiple_of(2) {
        return Err(Error::OddLength(len));
    }
    let d = s.halfstep();
    s.set_halfstep(d + 1);
    if len == 0 {
        return Ok(0);
    }
    let origin = s.origin_index();
    let lower = parity_mask(origin, d as i64 - 1);
    let words = s.values().words().to_vec();
    let mut flips: Vec<usize> = Vec::new();
    match tally {
        None => {
            for k in 0..words.len() {
                let cand = words[k] & !ring_next_word(&words, len, k) & lower & valid_mask(len, k);
                for bit in SetBits(cand) {
                    let p = k * WORD_BITS + bit;
                    let w = origin + p as i64;
                    if counter_unit(key, d, w as u64) < params.p2 {
                        flips.push(p);
                    }
                }
            }
        }
        Some(tally) => {
            for k in 0..words.len() {
                let next = ring_next_word(&words, len, k);
                for bit in SetBits(lower & valid_mask(len, k)) {
                    let p = k * WORD_BITS + bit;
                    let entry = ((words[k] >> bit & 1) << 1 | (next >> bit & 1)) as usize;
                    let w = origin + p as i64;
                    let mismatch = counter_unit(key, d, w as u64) < params.for_entry(entry);
                    tally.counts[entry][mismatch as usize] += 1;
                    if mismatch && entry == 2 {
                        flips.push(p);
                    }
                }
            }
        }
    }
    let values = s.values_mut();
    for &p in &flips {
        values.flip(p);
        values.flip((p + 1) % len);
    }
    Ok(flips.len())
}

/// Measured against prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observable {
    pub name: &'static str,
    pub measured: f64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub predicted: f64,
}

impl Observable {
    pub fn deviation(&self) -> f64 {
        self.measured - self.predicted
    }

    pub fn relative_deviation(&self) -> f64 {
        self.deviation() / self.predicted
    }

    /// Deviation in units of the standard error (0 when both vanish).
    pub fn z(&self) -> f64 {
        let dev = self.deviation();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.stderr
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingConfig {
    pub params: ModelBParams,
    pub len: usize,
    pub burn_in: u64,
    pub measure: u64,
    pub seed: u64,
    /// Number of time batches for the batch-means error estimate.
    pub batches: u32,
    /// Draw and tally every cell type (slower).
    pub tally_types: bool,
}

impl RingConfig {
    pub fn new(p2: f64, len: usize, burn_in: u64, measure: u64, seed: u64) -> Result<Self> {
        Ok(Self {
            params: ModelBParams::uniform(p2)?,
            len,
            burn_in,
            measure,
            seed,
            batches: 50,
            tally_types: false,
        })
    }
}

/// Site statistics at the start of one half-step, and that half-step's swaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfstepRecord {
    pub halfstep: u64,
    pub even_density: f64,
    pub odd_density: f64,
    /// Exchanges per active pair.
    pub swap_rate: f64,
}

pub const ACTIVE_PAIR_NAMES: [&str; 4] = ["active_00", "active_01", "active_10", "active_11"];
pub const SEAM_PAIR_NAMES: [&str; 4] = ["seam_00", "seam_01", "seam_10", "seam_11"];

#[derive(Clone, Debug, PartialEq)]
pub struct RingReport {
    pub config: RingConfig,
    pub marginals: StationaryMarginals,
    /// Density of the upper sites of the pairs about to be updated (prediction `u`).
    pub upper_density: Observable,
    /// Density of the lower sites (prediction `ū`).
    pub lower_density: Observable,
    /// Even-site density at even half-steps, where even sites are the upper ones.
    pub even_density: Observable,
    /// Joint frequencies on active pairs, index `2·lower + upper`.
    pub active_pairs: [Observable; 4],
    /// Joint frequencies on pairs straddling two active cells.
    pub seam_pairs: [Observable; 4],
    /// Exchanges per active pair (the flux, prediction `ū² p2`).
    pub swap_rate: Observable,
    pub total_swaps: u64,
    pub tally: Option<TypeTally>,
    /// Whether the final configuration equals the initial one.
    pub unchanged: bool,
    pub initial: SiteSequence,
    pub last: SiteSequence,
}

impl RingReport {
    pub fn observables(&self) -> Vec<Observable> {
        let mut out = vec![self.upper_density, self.lower_density, self.even_density];
        out.extend(self.active_pairs);
        out.extend(self.seam_pairs);
        out.push(self.swap_rate);
        out
    }

    pub fn max_abs_z(&self) -> f64 {
        self.observables().iter().map(|o| o.z().abs()).fold(0.0, f64::max)
    }
}

// Per-half-step statistic slots.
const UPPER: usize = 0;
const LOWER: usize = 1;
const ACTIVE: usize = 2;
const SEAM: usize = 6;
const SWAP: usize = 10;
const SLOTS: usize = 11;

fn pair_fractions(words: &[Word], len: usize, lower: Word) -> [f64; 4] {
    let mut counts = [0u64; 4];
    for k in 0..words.len() {
        let mask = lower & valid_mask(len, k);
        let (lo, up) = (words[k], ring_next_word(words, len, k));
        counts[0] += (!lo & !up & mask).count_ones() as u64;
        counts[1] += (!lo & up & mask).count_ones() as u64;
        counts[2] += (lo & !up & mask).count_ones() as u64;
        counts[3] += (lo & up & mask).count_ones() as u64;
    }
    let pairs = (len / 2) as f64;
    counts.map(|c| c as f64 / pairs)
}

fn density(words: &[Word], len: usize, mask: Word) -> f64 {
    let ones: u64 = (0..words.len()).map(|k| (words[k] & mask & valid_mask(len, k)).count_ones() as u64).sum();
    ones as f64 / (len / 2) as f64
}

/// Stationary run on a ring: start from the balanced alternating measure,
/// burn in, then measure every half-step. `observer` sees each measured
/// half-step.
pub fn run_ring(config: &RingConfig, mut observer: impl FnMut(&HalfstepRecord)) -> Result<RingReport> {
    let len = config.len;
    if len < 2 {
        return Err(Error::OutOfRange { what: "len", value: len as i64, min: 2, max: i64::MAX });
    }
    let marginals = stationary_u(config.params.p2)?;
    let (u, ubar) = (marginals.u, marginals.ubar);
    let mut s = sample_stationary_balanced(len, u, Seed::new(config.seed, 0))?;
    let initial = s.clone();
    let key = Seed::new(config.seed, 1).state();
    let mut tally = config.tally_types.then(TypeTally::default);
    let mut total_swaps = 0u64;
    for _ in 0..config.burn_in {
        total_swaps += halfstep(&mut s, &config.params, key, tally.as_mut())? as u64;
    }

    let batches = (config.batches.max(1) as u64).min(config.measure.max(1));
    let mut batch_sums = vec![[0.0f64; SLOTS]; batches as usize];
    let mut batch_counts = vec![0u64; batches as usize];
    let mut even_batches = vec![(0.0f64, 0u64); batches as usize];
    for t in 0..config.measure {
        let h = s.halfstep();
        let words = s.values().words().to_vec();
        let lower = parity_mask(0, h as i64 - 1);
        let upper = !lower;
        let mut slot = [0.0; SLOTS];
        slot[UPPER] = density(&words, len, upper);
        slot[LOWER] = density(&words, len, lower);
        slot[ACTIVE..ACTIVE + 4].copy_from_slice(&pair_fractions(&words, len, lower));
        slot[SEAM..SEAM + 4].copy_from_slice(&pair_fractions(&words, len, upper));
        let swaps = halfstep(&mut s, &config.params, key, tally.as_mut())?;
        total_swaps += swaps as u64;
        slot[SWAP] = swaps as f64 / (len / 2) as f64;

        let even_density = density(&words, len, EVEN_BITS);
        observer(&HalfstepRecord {
            halfstep: h,
            even_density,
            odd_density: density(&words, len, ODD_BITS),
            swap_rate: slot[SWAP],
        });
        let b = (t * batches / config.measure) as usize;
        for (acc, v) in batch_sums[b].iter_mut().zip(slot) {
            *acc += v;
        }
        batch_counts[b] += 1;
        if h % 2 == 0 {
            even_batches[b].0 += even_density;
            even_batches[b].1 += 1;
        }
    }

    let observe = |name, slot: usize, predicted| {
        let m: Moments = batch_sums
            .iter()
            .zip(&batch_counts)
            .filter(|(_, &c)| c > 0)
            .map(|(sums, &c)| sums[slot] / c as f64)
            .collect();
        Observable { name, measured: m.mean(), stderr: m.stderr(), predicted }
    };
    let even: Moments = even_batches.iter().filter(|(_, c)| *c > 0).map(|(x, c)| x / *c as f64).collect();
    let active_pred = [u * ubar, u * u, ubar * ubar, ubar * u];
    let seam_pred = [ubar * u, ubar * ubar, u * u, u * ubar];
    let unchanged = s.values() == initial.values();
    Ok(RingReport {
        config: *config,
        marginals,
        upper_density: observe("upper_density", UPPER, u),
        lower_density: observe("lower_density", LOWER, ubar),
        even_density: Observable { name: "even_density", measured: even.mean(), stderr: even.stderr(), predicted: u },
        active_pairs: core::array::from_fn(|i| observe(ACTIVE_PAIR_NAMES[i], ACTIVE + i, active_pred[i])),
        seam_pairs: core::array::from_fn(|i| observe(SEAM_PAIR_NAMES[i], SEAM + i, seam_pred[i])),
        swap_rate: observe("swap_rate", SWAP, ubar * ubar * config.params.p2),
        total_swaps,
        tally,
        unchanged,
        initial,
        last: s,
    })
}

/// Minimum ring length accepted by [`invariance_test`].
pub const INVARIANCE_MIN_LEN: usize = 10_000;

/// Checks that the alternating Bernoulli measure is preserved.
pub fn invariance_test(p2: f64, len: usize, burn_in: u64, measure: u64, seed: u64) -> Result<RingReport> {
    if len < INVARIANCE_MIN_LEN {
        return Err(Error::OutOfRange {
            what: "len",
            value: len as i64,
            min: INVARIANCE_MIN_LEN as i64,
            max: i64::MAX,
        });
    }
    run_ring(&RingConfig::new(p2, len, burn_in, measure, seed)?, |_| {})
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxReport {
    /// Exchanges per active pair per half-step.
    pub swaps_per_pair: f64,
    pub swaps_stderr: f64,
    pub f: f64,
    pub fbar: f64,
    /// `2u` with `u` the measured upper-site density.
    pub gamma_proxy: f64,
    pub gamma_proxy_stderr: f64,
}

impl FluxReport {
    pub fn from_ring(report: &RingReport) -> Self {
        let f = report.swap_rate.measured;
        Self {
            swaps_per_pair: f,
            swaps_stderr: report.swap_rate.stderr,
            f,
            fbar: 1.0 - f,
            gamma_proxy: 2.0 * report.upper_density.measured,
            gamma_proxy_stderr: 2.0 * report.upper_density.stderr,
        }
    }
}

pub fn measure_flux(p2: f64, len: usize, burn_in: u64, steps: u64, seed: u64) -> Result<FluxReport> {
    let report = run_ring(&RingConfig::new(p2, len, burn_in, steps, seed)?, |_| {})?;
    Ok(FluxReport::from_ring(&report))
}
