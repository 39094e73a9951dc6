//! Small statistics helpers: running moments and chi-square tail probabilities.

use libm::{erfc, exp, sqrt};

/// Welford accumulator; pushes must happen in a fixed order for bit
/// reproducibility.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            sqrt(self.variance() / self.count as f64)
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Upper tail `P(X > x)` of the chi-square distribution with `dof` degrees
/// of freedom, by the closed forms for integer `dof`.
pub fn chi_square_sf(x: f64, dof: u32) -> f64 {
    assert!(dof > 0);
    if x <= 0.0 {
        return 1.0;
    }
    if dof.is_multiple_of(2) {
        // e^{-x/2} Σ_{j < dof/2} (x/2)^j / j!
        let half = x / 2.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..dof / 2 {
            term *= half / j as f64;
            sum += term;
        }
        (exp(-half) * sum).min(1.0)
    } else {
        // erfc(√(x/2)) + √(2x/π) e^{-x/2} Σ_{j=1}^{(dof-1)/2} x^{j-1} / (1·3·…·(2j-1))
        let mut term = 1.0;
        let mut sum = 0.0;
        for j in 1..=(dof - 1) / 2 {
            if j > 1 {
                term *= x / (2 * j - 1) as f64;
            }
            sum += term;
        }
        let tail = erfc(sqrt(x / 2.0)) + sqrt(2.0 * x / core::f64::consts::PI) * exp(-x / 2.0) * sum;
        tail.min(1.0)
    }
}

/// Pearson chi-square of `counts` against the uniform distribution over
/// its cells: `(statistic, dof, p-value)`.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, u32, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected) * (c as f64 - expected) / expected).sum();
    let dof = counts.len() as u32 - 1;
    (stat, dof, chi_square_sf(stat, dof))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_reference_points() {
        // Critical values from standard tables.
        let cases = [
            (3.841458820694124, 1, 0.05),
            (5.991464547107979, 2, 0.05),
            (14.067140449340169, 7, 0.05),
            (24.321886347856854, 7, 0.001),
            (30.57791416689249, 15, 0.01),
            (2.1673499092980613, 7, 0.95),
        ];
        for (x, k, p) in cases {
            let got = chi_square_sf(x, k);
            assert!((got - p).abs() < 1e-9, "dof {k}: {got} vs {p}");
        }
        assert_eq!(chi_square_sf(0.0, 7), 1.0);
    }

    #[test]
    fn moments() {
        let m: Moments = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(Moments::new().stderr(), 0.0);
    }

    #[test]
    fn uniform_counts_give_zero_statistic() {
        let (stat, dof, p) = chi_square_uniform(&[10, 10, 10, 10]);
        assert_eq!((stat, dof, p), (0.0, 3, 1.0));
    }
}
