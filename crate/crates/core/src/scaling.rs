//! Hydrodynamic scaling: rarefaction fans of concave fluxes and empirical
//! density profiles from step initial condition.
//!
//! After `n` steps a site on wire `w` is placed at `x = (w + 1/2) / n`, so
//! the duality `w ↦ -1 - w` is exactly `x ↦ -x` and the bins, being
//! symmetric about 0, pair up exactly.

use alloc::vec;
use alloc::vec::Vec;

use libm::{floor, sqrt};

use crate::lcs::random_pair;
use crate::network::{evolve_step_ic, BernoulliRule, DiagonalEvolution};
use crate::rng::Seed;
use crate::stats::Moments;
use crate::{Error, Result, SiteSequence};

/// A flux `f` on `[0, 1]`.
pub trait FluxFunction {
    fn flux(&self, y: f64) -> f64;

    /// `f'(y)` by second-order finite differences, one-sided at the ends.
    fn derivative(&self, y: f64) -> f64 {
        const H: f64 = 1e-5;
        if y - H < 0.0 {
            (-3.0 * self.flux(y) + 4.0 * self.flux(y + H) - self.flux(y + 2.0 * H)) / (2.0 * H)
        } else if y + H > 1.0 {
            (3.0 * self.flux(y) - 4.0 * self.flux(y - H) + self.flux(y - 2.0 * H)) / (2.0 * H)
        } else {
            (self.flux(y + H) - self.flux(y - H)) / (2.0 * H)
        }
    }
}

/// `f(y) = y (1 - y)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Quadratic;

impl FluxFunction for Quadratic {
    fn flux(&self, y: f64) -> f64 {
        y * (1.0 - y)
    }

    fn derivative(&self, y: f64) -> f64 {
        1.0 - 2.0 * y
    }
}

/// A flux given by a closure; the derivative is taken numerically.
pub struct FnFlux<F>(pub F);

impl<F: Fn(f64) -> f64> FluxFunction for FnFlux<F> {
    fn flux(&self, y: f64) -> f64 {
        (self.0)(y)
    }
}

/// A flux with a supplied derivative.
pub struct FnFluxWithDerivative<F, D>(pub F, pub D);

impl<F: Fn(f64) -> f64, D: Fn(f64) -> f64> FluxFunction for FnFluxWithDerivative<F, D> {
    fn flux(&self, y: f64) -> f64 {
        (self.0)(y)
    }

    fn derivative(&self, y: f64) -> f64 {
        (self.1)(y)
    }
}

const GRID: usize = 200;

/// Checks `f(0) = f(1) = 0` and strict concavity by three-point tests on a grid.
pub fn validate_flux<F: FluxFunction + ?Sized>(flux: &F) -> Result<()> {
    for (what, y) in [("f(0)", 0.0), ("f(1)", 1.0)] {
        let value = flux.flux(y);
        if value.abs() > 1e-12 {
            return Err(Error::Domain { what, value });
        }
    }
    let h = 1.0 / GRID as f64;
    for i in 1..GRID {
        let y = i as f64 * h;
        let second = flux.flux(y - h) - 2.0 * flux.flux(y) + flux.flux(y + h);
        if second.partial_cmp(&0.0) != Some(core::cmp::Ordering::Less) {
            return Err(Error::NotConcave { at: y });
        }
    }
    Ok(())
}

/// A validated concave flux and its rarefaction fan from step data
/// (density 1 left of the origin, 0 right of it).
pub struct Rarefaction<'a, F: ?Sized> {
    flux: &'a F,
    left_edge: f64,
    right_edge: f64,
}

impl<'a, F: FluxFunction + ?Sized> Rarefaction<'a, F> {
    pub fn new(flux: &'a F) -> Result<Self> {
        validate_flux(flux)?;
        Ok(Self { flux, left_edge: flux.derivative(1.0), right_edge: flux.derivative(0.0) })
    }

    /// Fan edges `(f'(1), f'(0))` in units of `x / t`.
    pub fn edges(&self) -> (f64, f64) {
        (self.left_edge, self.right_edge)
    }

    /// `(f')⁻¹(v)` by bisection to 1e-12.
    fn inverse_derivative(&self, v: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.flux.derivative(mid) > v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Density at `(t, x)`; `t` must be positive.
    pub fn density(&self, t: f64, x: f64) -> Result<f64> {
        if t.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) {
            return Err(Error::Domain { what: "t", value: t });
        }
        let v = x / t;
        Ok(if v <= self.left_edge {
            1.0
        } else if v >= self.right_edge {
            0.0
        } else {
            self.inverse_derivative(v)
        })
    }

    pub fn peak_density(&self) -> f64 {
        self.inverse_derivative(0.0)
    }

    pub fn peak_flux(&self) -> f64 {
        self.flux.flux(self.peak_density())
    }
}

pub fn rarefaction_density<F: FluxFunction + ?Sized>(flux: &F, t: f64, x: f64) -> Result<f64> {
    Rarefaction::new(flux)?.density(t, x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassReport {
    /// `∫ y(1, x) dx` over `x ∈ [0, f'(0)]`.
    pub integral: f64,
    pub peak_density: f64,
    pub peak_flux: f64,
    pub difference: f64,
}

#[allow(clippy::too_many_arguments)]
fn simpson<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `g` over `[a, b]`.
pub fn integrate<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (g(a), g(0.5 * (a + b)), g(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&g, a, b, fa, fm, fb, whole, tol, 40)
}

/// Mass carried past the origin by time 1, computed by quadrature of the fan
/// and, independently, as the peak flux `f(ỹ)`.
pub fn transported_mass<F: FluxFunction + ?Sized>(flux: &F) -> Result<MassReport> {
    let fan = Rarefaction::new(flux)?;
    let (_, right) = fan.edges();
    let integral = integrate(|x| fan.density(1.0, x).unwrap_or(f64::NAN), 0.0, right, 1e-12);
    let peak_density = fan.peak_density();
    let peak_flux = fan.peak_flux();
    Ok(MassReport { integral, peak_density, peak_flux, difference: integral - peak_flux })
}

/// Which network model to evolve from step initial condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProfileModel {
    /// Random binary string pair (fresh pair per ensemble member).
    Cs,
    /// Independent Bernoulli cells with exchange rate `p2`.
    B { p2: f64 },
}

pub const MIN_PROFILE_STEPS: usize = 1000;
pub const DEFAULT_BINS: usize = 201;
pub const PROFILE_RANGE: (f64, f64) = (-1.5, 1.5);

/// Final configuration of one ensemble member after `n` steps.
///
/// The window is `[-2n, 2n)`, which no exchange can leave in `2n`
/// half-steps; model CS uses strings of length `2n`.
pub fn evolve_member(model: ProfileModel, n: usize, seed: Seed) -> Result<SiteSequence> {
    match model {
        ProfileModel::Cs => {
            let (a, b) = random_pair(2 * n, 2 * n, seed);
            evolve_step_ic(&a, &b, n)
        }
        ProfileModel::B { p2 } => {
            if !(0.0..=1.0).contains(&p2) {
                return Err(Error::Domain { what: "p2", value: p2 });
            }
            let rule = BernoulliRule { key: seed.state(), rate: p2 };
            let mut evo = DiagonalEvolution::new(SiteSequence::step_initial(2 * n, 2 * n), rule);
            evo.run_halfsteps(2 * n as u64);
            Ok(evo.into_state())
        }
    }
}

/// Per-member observables: bin densities and transported mass.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberProfile {
    pub bin_density: Vec<f64>,
    /// Particles on nonnegative wires, divided by `n`.
    pub mass: f64,
}

/// Maps window positions to bins for a given `n`.
#[derive(Clone, Debug)]
pub struct Binning {
    pub n: usize,
    pub bins: usize,
    /// `(x - lo) / width` bin per window position, offset by the window origin.
    bin_of: Vec<Option<usize>>,
    origin: i64,
    sites: Vec<u32>,
}

impl Binning {
    pub fn new(n: usize, bins: usize) -> Result<Self> {
        if n < MIN_PROFILE_STEPS {
            return Err(Error::OutOfRange { what: "n", value: n as i64, min: MIN_PROFILE_STEPS as i64, max: i64::MAX });
        }
        if bins == 0 || bins.is_multiple_of(2) {
            return Err(Error::OutOfRange { what: "bins (odd)", value: bins as i64, min: 1, max: i64::MAX });
        }
        let (lo, hi) = PROFILE_RANGE;
        let width = (hi - lo) / bins as f64;
        let origin = -2 * n as i64;
        let mut sites = vec![0u32; bins];
        let bin_of = (0..4 * n)
            .map(|p| {
                let x = ((origin + p as i64) as f64 + 0.5) / n as f64;
                let k = floor((x - lo) / width);
                (k >= 0.0 && k < bins as f64).then(|| {
                    sites[k as usize] += 1;
                    k as usize
                })
            })
            .collect();
        Ok(Self { n, bins, bin_of, origin, sites })
    }

    pub fn centers(&self) -> Vec<f64> {
        let (lo, hi) = PROFILE_RANGE;
        let width = (hi - lo) / self.bins as f64;
        (0..self.bins).map(|k| lo + (k as f64 + 0.5) * width).collect()
    }

    pub fn member(&self, s: &SiteSequence) -> MemberProfile {
        debug_assert_eq!(s.origin_index(), self.origin);
        let mut counts = vec![0u32; self.bins];
        for p in s.values().ones_positions() {
            if let Some(k) = self.bin_of[p] {
                counts[k] += 1;
            }
        }
        let bin_density = counts.iter().zip(&self.sites).map(|(&c, &s)| c as f64 / s as f64).collect();
        MemberProfile { bin_density, mass: s.particles_at_or_above(0) as f64 / self.n as f64 }
    }
}

pub fn profile_member(model: ProfileModel, binning: &Binning, seed: Seed) -> Result<MemberProfile> {
    Ok(binning.member(&evolve_member(model, binning.n, seed)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileBin {
    pub x: f64,
    pub y_mean: f64,
    pub y_stderr: f64,
}

/// Skew-symmetry summary: for each member, the mean of
/// `y(-x) + y(x) - 1` over bin pairs with `|x| ≤ 1`, then averaged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewReport {
    pub mean: f64,
    pub stderr: f64,
    /// Largest per-pair `|y(-x) + y(x) - 1| / σ`.
    pub max_pair_z: f64,
    /// `y(-1/2) + y(1/2) - 1` and its standard error.
    pub at_half: (f64, f64),
}

impl SkewReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.mean.abs() <= sigmas * self.stderr
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    pub model: ProfileModel,
    pub n: usize,
    /// Time in scaled units (always 1).
    pub t: f64,
    pub members: usize,
    pub bins: Vec<ProfileBin>,
    pub transported_mass: f64,
    pub transported_mass_stderr: f64,
    /// Density in the bin containing `x = 0`.
    pub peak_density: f64,
    pub peak_density_stderr: f64,
    pub skew: SkewReport,
}

impl DensityProfile {
    /// Largest `|Δy| / σ` between two profiles on the same bins, and the
    /// largest combined σ.
    pub fn sup_difference(&self, other: &DensityProfile) -> (f64, f64, f64) {
        let mut sup: f64 = 0.0;
        let mut sup_z: f64 = 0.0;
        let mut sigma: f64 = 0.0;
        for (p, q) in self.bins.iter().zip(&other.bins) {
            let d = (p.y_mean - q.y_mean).abs();
            let s = sqrt(p.y_stderr * p.y_stderr + q.y_stderr * q.y_stderr);
            sup = sup.max(d);
            sigma = sigma.max(s);
            if d > 0.0 {
                sup_z = sup_z.max(d / s);
            }
        }
        (sup, sup_z, sigma)
    }
}

/// Reduces member profiles pushed in a fixed order.
#[derive(Clone, Debug)]
pub struct ProfileAccumulator {
    model: ProfileModel,
    centers: Vec<f64>,
    bins: Vec<Moments>,
    mass: Moments,
    skew: Moments,
    pairs: Vec<Moments>,
    n: usize,
}

impl ProfileAccumulator {
    pub fn new(model: ProfileModel, binning: &Binning) -> Self {
        let half = binning.bins / 2;
        Self {
            model,
            centers: binning.centers(),
            bins: vec![Moments::new(); binning.bins],
            mass: Moments::new(),
            skew: Moments::new(),
            pairs: vec![Moments::new(); half],
            n: binning.n,
        }
    }

    pub fn push(&mut self, member: &MemberProfile) {
        let last = self.bins.len() - 1;
        for (acc, &y) in self.bins.iter_mut().zip(&member.bin_density) {
            acc.push(y);
        }
        self.mass.push(member.mass);
        let mut sum = 0.0;
        let mut count = 0;
        for (k, acc) in self.pairs.iter_mut().enumerate() {
            let s = member.bin_density[k] + member.bin_density[last - k] - 1.0;
            acc.push(s);
            if self.centers[k].abs() <= 1.0 {
                sum += s;
                count += 1;
            }
        }
        self.skew.push(sum / count as f64);
    }

    pub fn finish(&self) -> DensityProfile {
        let bins: Vec<ProfileBin> = self
            .bins
            .iter()
            .zip(&self.centers)
            .map(|(m, &x)| ProfileBin { x, y_mean: m.mean(), y_stderr: m.stderr() })
            .collect();
        let centre = bins.len() / 2;
        let max_pair_z = self
            .pairs
            .iter()
            .filter(|m| m.mean() != 0.0)
            .map(|m| m.mean().abs() / m.stderr())
            .fold(0.0, f64::max);
        let half_pair = self
            .centers
            .iter()
            .enumerate()
            .take(self.pairs.len())
            .min_by(|(_, a), (_, b)| (**a + 0.5).abs().total_cmp(&(**b + 0.5).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let at_half = self.pairs.get(half_pair).map_or((0.0, 0.0), |m| (m.mean(), m.stderr()));
        DensityProfile {
            model: self.model,
            n: self.n,
            t: 1.0,
            members: self.mass.count() as usize,
            transported_mass: self.mass.mean(),
            transported_mass_stderr: self.mass.stderr(),
            peak_density: bins[centre].y_mean,
            peak_density_stderr: bins[centre].y_stderr,
            skew: SkewReport { mean: self.skew.mean(), stderr: self.skew.stderr(), max_pair_z, at_half },
            bins,
        }
    }
}

/// Sequential ensemble: member `i` uses `Seed::new(master, i)`.
pub fn empirical_profile(model: ProfileModel, n: usize, members: usize, bins: usize, master: u64) -> Result<DensityProfile> {
    let binning = Binning::new(n, bins)?;
    let mut acc = ProfileAccumulator::new(model, &binning);
    for i in 0..members {
        acc.push(&profile_member(model, &binning, Seed::new(master, i as u64))?);
    }
    Ok(acc.finish())
}
