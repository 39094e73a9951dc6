//! Direct Monte Carlo estimates of `E L_n / n` and exact values for small `n`.
//!
//! Trial `i` compares the pair drawn by [`random_pair`] from
//! `Seed::new(master, i)`. Lengths are reduced as integer sums, so an
//! estimate does not depend on how trials are scheduled.

use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::lcs::{lcs, random_pair};
use crate::rng::Seed;
use crate::{Engine, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaEstimate {
    pub n: usize,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    /// `c · √(ln n / n)`.
    pub alexander_gap: f64,
    pub c: f64,
}

impl GammaEstimate {
    /// Builds an estimate from per-trial LCS lengths.
    pub fn from_lengths(n: usize, lengths: impl IntoIterator<Item = usize>, c: f64) -> Self {
        let mut sums = LengthSums::default();
        for l in lengths {
            sums.push(l);
        }
        sums.estimate(n, c)
    }

    pub fn envelope_upper(&self) -> f64 {
        self.mean + self.alexander_gap
    }
}

/// Exact integer moments of LCS lengths; merging is associative and commutative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LengthSums {
    pub count: u64,
    pub sum: u64,
    pub sum_sq: u128,
}

impl LengthSums {
    pub fn push(&mut self, length: usize) {
        self.count += 1;
        self.sum += length as u64;
        self.sum_sq += (length as u128) * (length as u128);
    }

    pub fn merge(self, other: Self) -> Self {
        Self { count: self.count + other.count, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    pub fn estimate(&self, n: usize, c: f64) -> GammaEstimate {
        let t = self.count;
        let nf = n as f64;
        let mean = if t == 0 { 0.0 } else { self.sum as f64 / (t as f64 * nf) };
        let stderr = if t < 2 {
            0.0
        } else {
            // Unbiased variance of L from exact integers, then scaled to L / n.
            let num = t as u128 * self.sum_sq - (self.sum as u128) * (self.sum as u128);
            let var = num as f64 / (t as f64 * (t - 1) as f64);
            sqrt(var / t as f64) / nf
        };
        GammaEstimate { n, trials: t, mean, stderr, alexander_gap: alexander_gap(n, c), c }
    }
}

pub fn alexander_gap(n: usize, c: f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    c * sqrt(log(n as f64) / n as f64)
}

/// LCS length of trial `index`.
pub fn trial_length(n: usize, master: u64, index: u64, engine: Engine) -> Result<usize> {
    let (a, b) = random_pair(n, n, Seed::new(master, index));
    Ok(lcs(&a, &b, engine)?.length)
}

fn check_sizes(n: usize, trials: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange { what: "n", value: 0, min: 1, max: i64::MAX });
    }
    if trials == 0 {
        return Err(Error::OutOfRange { what: "trials", value: 0, min: 1, max: i64::MAX });
    }
    Ok(())
}

/// Sequential estimate with Alexander constant `c`.
pub fn estimate_gamma(n: usize, trials: u64, master: u64, engine: Engine, c: f64) -> Result<GammaEstimate> {
    check_sizes(n, trials)?;
    let mut sums = LengthSums::default();
    for i in 0..trials {
        sums.push(trial_length(n, master, i, engine)?);
    }
    Ok(sums.estimate(n, c))
}

pub const EXACT_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactMean {
    pub n: usize,
    /// Sum of LCS lengths over all `4^n` pairs.
    pub total: u64,
    /// `total / (4^n · n)`.
    pub value: f64,
}

/// Exhaustive `E L_n / n` over all `4^n` pairs of length-`n` strings.
///
/// Complementing both strings preserves the LCS, so only first strings
/// starting with 0 are enumerated and counted twice.
pub fn exact_small_n(n: usize) -> Result<ExactMean> {
    if n > EXACT_LIMIT {
        return Err(Error::SizeGuard { n, limit: EXACT_LIMIT });
    }
    if n == 0 {
        return Err(Error::OutOfRange { what: "n", value: 0, min: 1, max: EXACT_LIMIT as i64 });
    }
    let full: u64 = (1 << n) - 1;
    let mut total = 0u64;
    for a in 0..1u64 << (n - 1) {
        // Bit i of `a` is a_i; a_0 = 0.
        let a = a << 1;
        let ones = a;
        let zeros = !a & full;
        for b in 0..1u64 << n {
            let mut v = full;
            for j in 0..n {
                let m = if b >> j & 1 == 1 { ones } else { zeros };
                let u = v & m;
                v = (v.wrapping_add(u) | (v & !m)) & full;
            }
            total += (n - v.count_ones() as usize) as u64;
        }
    }
    total *= 2;
    let pairs = 1u64 << (2 * n);
    Ok(ExactMean { n, total, value: total as f64 / (pairs as f64 * n as f64) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub estimate: GammaEstimate,
    /// `mean + c √(ln n / n)`.
    pub envelope_upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Consecutive rows `(n_i, n_{i+1})` whose means drop by more than two
    /// combined standard errors.
    pub monotonicity_violations: Vec<(usize, usize)>,
}

impl ConvergenceTable {
    pub fn from_estimates(estimates: impl IntoIterator<Item = GammaEstimate>) -> Self {
        let rows: Vec<ConvergenceRow> = estimates
            .into_iter()
            .map(|estimate| ConvergenceRow { estimate, envelope_upper: estimate.envelope_upper() })
            .collect();
        let monotonicity_violations = rows
            .windows(2)
            .filter(|w| {
                let (a, b) = (w[0].estimate, w[1].estimate);
                let se = sqrt(a.stderr * a.stderr + b.stderr * b.stderr);
                b.mean < a.mean - 2.0 * se
            })
            .map(|w| (w[0].estimate.n, w[1].estimate.n))
            .collect();
        Self { rows, monotonicity_violations }
    }

    /// Rows whose `[mean, envelope_upper]` contains `value`.
    pub fn bracketing(&self, value: f64) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.estimate.mean <= value && value <= r.envelope_upper)
            .map(|r| r.estimate.n)
            .collect()
    }
}

pub fn convergence_table(ns: &[usize], trials: u64, master: u64, engine: Engine, c: f64) -> Result<ConvergenceTable> {
    let estimates = ns.iter().map(|&n| estimate_gamma(n, trials, master, engine, c)).collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::from_estimates(estimates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcs::lcs_dp;
    use crate::BinaryString;

    fn dp_enumeration(n: usize) -> u64 {
        let strings: Vec<BinaryString> = (0..1u32 << n)
            .map(|x| BinaryString::from_bools((0..n).map(|i| x >> i & 1 == 1)))
            .collect();
        let mut total = 0;
        for a in &strings {
            for b in &strings {
                total += lcs_dp(a, b).length as u64;
            }
        }
        total
    }

    #[test]
    fn exact_values() {
        assert_eq!(exact_small_n(1).unwrap().value, 0.5);
        // n = 2: LCS is 2 for 4 equal pairs, 0 for 2 complementary
        // constant pairs, 1 otherwise.
        assert_eq!(exact_small_n(2).unwrap().total, 4 * 2 + 10);
        for n in 1..=6 {
            assert_eq!(exact_small_n(n).unwrap().total, dp_enumeration(n), "n = {n}");
        }
        assert!(exact_small_n(12).is_ok());
        assert_eq!(exact_small_n(13), Err(Error::SizeGuard { n: 13, limit: 12 }));
    }

    #[test]
    fn estimates_are_reproducible_and_engine_independent() {
        let a = estimate_gamma(200, 50, 7, Engine::BitParallel, 1.0).unwrap();
        let b = estimate_gamma(200, 50, 7, Engine::Dp, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a.mean > 0.7 && a.mean < 0.85);
        let lengths: Vec<usize> = (0..50).map(|i| trial_length(200, 7, i, Engine::Dp).unwrap()).collect();
        assert_eq!(GammaEstimate::from_lengths(200, lengths.iter().rev().copied(), 1.0), a);
        assert!(estimate_gamma(0, 1, 1, Engine::Dp, 1.0).is_err());
        assert!(estimate_gamma(30, 1, 1, Engine::BruteForce, 1.0).is_err());
    }

    #[test]
    fn small_n_estimate_matches_exact() {
        for n in 1..=3 {
            let est = estimate_gamma(n, 100_000, 3, Engine::BitParallel, 1.0).unwrap();
            let exact = exact_small_n(n).unwrap().value;
            assert!((est.mean - exact).abs() < 4.0 * est.stderr, "n = {n}: {est:?} vs {exact}");
        }
    }

    #[test]
    fn sums_merge_in_any_order() {
        let mut x = LengthSums::default();
        let mut y = LengthSums::default();
        for l in [3, 5, 8] {
            x.push(l);
        }
        y.push(13);
        assert_eq!(x.merge(y), y.merge(x));
        let est = x.merge(y).estimate(16, 1.0);
        assert_eq!(est.mean, 29.0 / 64.0);
    }

    #[test]
    fn envelope_and_table() {
        let g1 = alexander_gap(1000, 1.0);
        let g2 = alexander_gap(2000, 1.0);
        assert!((g2 / g1 - (0.5f64 * (2000f64).ln() / (1000f64).ln()).sqrt()).abs() < 1e-12);
        let t = convergence_table(&[16, 64, 256], 200, 1, Engine::BitParallel, 1.0).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.monotonicity_violations.is_empty());
        assert!(t.rows.iter().all(|r| r.envelope_upper > r.estimate.mean));
        assert_eq!(t.bracketing(2.0), Vec::<usize>::new());
    }
}
