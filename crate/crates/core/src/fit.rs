//! Local fitting of model B to the string model.
//!
//! Unknowns are the stationary marginal `u` and the cell-type rates
//! `p0 = p3`, `p1`, `p2`. Five polynomial equations tie them together:
//! time invariance (E1), total probability (E2) and three linking equations
//! (E3 to E5). E2 is implied by the others at any root, so the solver runs
//! damped Newton on the square system {E1, E3, E4, E5} and reports E2 as a
//! consistency check. Bars denote complements: `q̄ = 1 - q`.

use alloc::vec::Vec;

use libm::sqrt;

use crate::{Error, Result};

/// Upper bound on the string-model constant from the literature.
pub const KNOWN_UPPER_BOUND: f64 = 0.826280;

/// Auxiliary probabilities derived from `(u, p0, p1, p2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxProbs {
    pub q0: f64,
    pub q1: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl AuxProbs {
    pub fn as_array(&self) -> [f64; 6] {
        [self.q0, self.q1, self.r0, self.r1, self.r2, self.r3]
    }
}

fn aux_unchecked(u: f64, p0: f64, p1: f64, p2: f64) -> AuxProbs {
    let ub = 1.0 - u;
    let p3 = p0;
    AuxProbs {
        q0: ub * p0 + u * p1,
        q1: ub * p2 + u * p3,
        r0: p0,
        r1: 1.0 - u * u * (1.0 - p1) / (ub * ub),
        r2: 0.0,
        r3: p3,
    }
}

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

pub fn aux(u: f64, p0: f64, p1: f64, p2: f64) -> Result<AuxProbs> {
    check_unit("u", u)?;
    check_unit("p0", p0)?;
    check_unit("p1", p1)?;
    check_unit("p2", p2)?;
    if u == 1.0 {
        return Err(Error::Domain { what: "u", value: u });
    }
    Ok(aux_unchecked(u, p0, p1, p2))
}

fn residuals_unchecked(u: f64, p0: f64, p1: f64, p2: f64) -> [f64; 5] {
    let ub = 1.0 - u;
    let p3 = p0;
    let AuxProbs { q0, q1, r0, r1, .. } = aux_unchecked(u, p0, p1, p2);
    let (q0b, q1b, r0b, r1b) = (1.0 - q0, 1.0 - q1, 1.0 - r0, 1.0 - r1);
    let same0 = r0 * q0 + r0b * q0b;
    let cross0 = r0b * q0 + r0 * q0b;
    let (u2, ub2) = (u * u, ub * ub);

    let e1 = u2 - ub2 * (1.0 - p2);
    let e2 = ub2 * p2 + 2.0 * u * ub * p0 + u2 * p1 - 0.5;
    let e3 = ub2 * p2 - (2.0 * u2 * q0 * q0b + 2.0 * ub2 * u * p2 * same0 + ub2 * ub2 * r1 * p2 * p2);
    let e4 = u * ub * p0
        - (u * ub * q1b * cross0 + u2 * ub * p0 * same0 + u * ub2 * ub * r1 * p0 * p2 + ub2 * ub * r1b * q1b * p2);
    let e5 = u2 * p1 - (u2 * ub2 * r1 * p0 * p3 + 2.0 * u * ub2 * r1b * p0 * q1b + ub2 * r1 * q1b * q1b);
    [e1, e2, e3, e4, e5]
}

/// `[E1, E2, E3, E4, E5]` at `(u, p0, p1, p2)`, each strictly inside `(0, 1)`.
pub fn residuals(u: f64, p0: f64, p1: f64, p2: f64) -> Result<[f64; 5]> {
    for (what, value) in [("u", u), ("p0", p0), ("p1", p1), ("p2", p2)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::Domain { what, value });
        }
    }
    Ok(residuals_unchecked(u, p0, p1, p2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMethod {
    Newton,
    ClosedForm,
    ArratiaSteele,
}

impl FitMethod {
    pub fn name(self) -> &'static str {
        match self {
            FitMethod::Newton => "newton",
            FitMethod::ClosedForm => "closed-form",
            FitMethod::ArratiaSteele => "arratia-steele",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitSolution {
    pub u: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub gamma: f64,
    pub aux: AuxProbs,
    pub residuals: [f64; 5],
    pub method: FitMethod,
    /// Newton iterations (0 for direct evaluations).
    pub iterations: u32,
}

impl FitSolution {
    fn at(x: [f64; 4], method: FitMethod, iterations: u32) -> Self {
        let [u, p0, p1, p2] = x;
        Self {
            u,
            p0,
            p1,
            p2,
            gamma: 2.0 * u,
            aux: aux_unchecked(u, p0, p1, p2),
            residuals: residuals_unchecked(u, p0, p1, p2),
            method,
            iterations,
        }
    }

    pub fn p3(&self) -> f64 {
        self.p0
    }

    pub fn point(&self) -> [f64; 4] {
        [self.u, self.p0, self.p1, self.p2]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Every main and auxiliary variable lies in `[0, 1]`.
    pub fn is_admissible(&self) -> bool {
        self.point().iter().chain(self.aux.as_array().iter()).all(|v| (0.0..=1.0).contains(v))
    }

    pub fn exceeds_known_upper_bound(&self) -> bool {
        self.gamma > KNOWN_UPPER_BOUND
    }
}

/// The exact root in radicals.
pub fn closed_form() -> FitSolution {
    let u = sqrt(7.0 / 3.0) - sqrt((23.0 - 5.0 * sqrt(21.0)) / 6.0) - 1.0;
    let (u2, u3) = (u * u, u * u * u);
    let p0 = -8.0 / 3.0 + 49.0 / 6.0 * u - u2 - 0.5 * u3;
    let p1 = 29.0 / 2.0 - 51.0 * u + 75.0 / 2.0 * u2 + 9.0 * u3;
    let p2 = -2.0 / 3.0 + 34.0 / 3.0 * u - 19.0 * u2 - 4.0 * u3;
    FitSolution::at([u, p0, p1, p2], FitMethod::ClosedForm, 0)
}

/// Model B with every rate 1/2, which gives the Arratia–Steele value `2(√2 - 1)`.
pub fn arratia_steele() -> FitSolution {
    FitSolution::at([core::f64::consts::SQRT_2 - 1.0, 0.5, 0.5, 0.5], FitMethod::ArratiaSteele, 0)
}

pub const DEFAULT_START: [f64; 4] = [core::f64::consts::SQRT_2 - 1.0, 0.5, 0.5, 0.5];

const MAX_ITERATIONS: u32 = 100;
const MAX_HALVINGS: u32 = 40;
const TOLERANCE: f64 = 1e-14;

fn system(x: &[f64; 4]) -> [f64; 4] {
    let r = residuals_unchecked(x[0], x[1], x[2], x[3]);
    [r[0], r[2], r[3], r[4]]
}

fn norm2(v: &[f64; 4]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

/// Central-difference Jacobian of {E1, E3, E4, E5}, step `rel · max(1, |x_j|)`.
pub fn jacobian(x: &[f64; 4], rel: f64) -> [[f64; 4]; 4] {
    let mut jac = [[0.0; 4]; 4];
    for j in 0..4 {
        let h = rel * x[j].abs().max(1.0);
        let (mut plus, mut minus) = (*x, *x);
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (system(&plus), system(&minus));
        for i in 0..4 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col];
        for row in col + 1..4 {
            let factor = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Damped Newton from `start`; the result must be admissible.
pub fn solve(start: Option<[f64; 4]>) -> Result<FitSolution> {
    let mut x = start.unwrap_or(DEFAULT_START);
    let mut fx = system(&x);
    let mut norm = norm2(&fx);
    let mut iterations = 0;
    while norm > TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        let step = solve_linear(jacobian(&x, 1e-7), fx.map(|v| -v)).ok_or(Error::SingularJacobian)?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = core::array::from_fn(|i| x[i] + scale * step[i]);
            let ft = system(&trial);
            let nt = norm2(&ft);
            if nt < norm {
                (x, fx, norm) = (trial, ft, nt);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let solution = FitSolution::at(x, FitMethod::Newton, iterations);
    if norm > 1e-12 || !norm.is_finite() || !solution.is_admissible() {
        return Err(Error::NoConvergence { starts: 1, best_residual: norm });
    }
    Ok(solution)
}

/// The 16 corners of `[0.3, 0.5] × [0.3, 0.7]³`.
pub fn multistart_points() -> [[f64; 4]; 16] {
    core::array::from_fn(|i| {
        let pick = |bit: usize, lo: f64, hi: f64| if i >> bit & 1 == 0 { lo } else { hi };
        [pick(3, 0.3, 0.5), pick(2, 0.3, 0.7), pick(1, 0.3, 0.7), pick(0, 0.3, 0.7)]
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiStartReport {
    /// Converged admissible points, lexicographically ordered.
    pub solutions: Vec<FitSolution>,
    pub failures: usize,
    /// Largest coordinate difference between any two converged points.
    pub spread: f64,
}

impl MultiStartReport {
    pub fn best(&self) -> &FitSolution {
        &self.solutions[0]
    }
}

/// Merges per-start outcomes (in any order) into a deterministic report.
pub fn merge_starts(outcomes: impl IntoIterator<Item = Result<FitSolution>>) -> Result<MultiStartReport> {
    let mut solutions = Vec::new();
    let mut failures = 0;
    let mut best_residual = f64::INFINITY;
    for outcome in outcomes {
        match outcome {
            Ok(s) => solutions.push(s),
            Err(Error::NoConvergence { best_residual: r, .. }) => {
                failures += 1;
                best_residual = best_residual.min(r);
            }
            Err(_) => failures += 1,
        }
    }
    if solutions.is_empty() {
        return Err(Error::NoConvergence { starts: failures, best_residual });
    }
    solutions.sort_by(|a, b| {
        a.point().iter().zip(b.point().iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut spread: f64 = 0.0;
    for i in 0..4 {
        let (lo, hi) = solutions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.point()[i]), hi.max(s.point()[i]))
        });
        spread = spread.max(hi - lo);
    }
    Ok(MultiStartReport { solutions, failures, spread })
}

pub fn solve_multistart() -> Result<MultiStartReport> {
    merge_starts(multistart_points().iter().map(|&p| solve(Some(p))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::SQRT_2;

    const PRINTED: [f64; 4] = [0.407025, 0.457987, 0.561206, 0.528838];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn aux_properties() {
        let a = aux(0.3, 0.6, 0.2, 0.9).unwrap();
        assert_eq!(a.r2, 0.0);
        assert_eq!(a.r0, 0.6);
        assert_eq!(a.r3, 0.6);
        assert!(close((1.0 - a.r1) * 0.49, 0.09 * 0.8, 1e-15));
        for u in [0.0, 0.2, 0.45] {
            assert!(close(aux(u, 0.37, 0.37, 0.5).unwrap().q0, 0.37, 1e-15));
        }
        let [u, p0, p1, p2] = PRINTED;
        let a = aux(u, p0, p1, p2).unwrap();
        assert!(close(a.q0, 0.5, 1e-5) && close(a.q1, 0.5, 1e-5), "{a:?}");
        assert!(aux(1.0, 0.5, 0.5, 0.5).is_err());
        assert!(aux(0.5, 1.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn residuals_at_printed_solution() {
        let [u, p0, p1, p2] = PRINTED;
        let r = residuals(u, p0, p1, p2).unwrap();
        assert!(r.iter().all(|e| e.abs() < 5e-5), "{r:?}");
        assert!(residuals(0.0, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn residuals_at_constructed_point() {
        // Pick u, set p2 from E1, then p0 = p1 = p from E2.
        let u: f64 = 0.38;
        let ub = 1.0 - u;
        let p2 = 1.0 - u * u / (ub * ub);
        let p = (0.5 - ub * ub * p2) / (2.0 * u * ub + u * u);
        let r = residuals(u, p, p, p2).unwrap();
        assert!(r[0].abs() < 1e-15 && r[1].abs() < 1e-15, "{r:?}");
    }

    #[test]
    fn closed_form_root() {
        let s = closed_form();
        assert!(close(s.u, 0.407025, 5e-7));
        assert!(close(s.gamma, 0.814050, 5e-7));
        assert!(close(s.p0, 0.457987, 5e-7));
        assert!(close(s.p1, 0.561206, 5e-7));
        assert!(close(s.p2, 0.528838, 5e-7));
        assert!(s.max_residual() < 1e-12, "{:?}", s.residuals);
        assert!(close(s.aux.q0, 0.5, 1e-10) && close(s.aux.q1, 0.5, 1e-10));
        assert!(s.is_admissible());
        assert!(!s.exceeds_known_upper_bound());
    }

    #[test]
    fn newton_matches_closed_form() {
        let exact = closed_form();
        let s = solve(None).unwrap();
        for (a, b) in s.point().iter().zip(exact.point()) {
            assert!(close(*a, b, 1e-10), "{a} vs {b}");
        }
        assert!(s.residuals[1].abs() < 1e-10);
        assert!(s.iterations > 0);
        let multi = solve_multistart().unwrap();
        assert_eq!(multi.solutions.len(), 16);
        assert!(multi.spread < 1e-8, "spread {}", multi.spread);
    }

    #[test]
    fn arratia_steele_point() {
        let s = arratia_steele();
        assert!(close(s.u, SQRT_2 - 1.0, 0.0));
        assert!(close(s.gamma, 0.828427, 5e-7));
        assert!(s.residuals[0].abs() < 1e-15 && s.residuals[1].abs() < 1e-15);
        assert!(s.residuals[2..].iter().all(|e| e.abs() > 1e-3), "{:?}", s.residuals);
        assert!(s.exceeds_known_upper_bound());
    }

    #[test]
    fn jacobian_matches_residual_differences() {
        let x = [0.41, 0.47, 0.55, 0.52];
        let jac = jacobian(&x, 1e-7);
        let dir = [0.3, -0.2, 0.5, 0.1];
        let f0 = system(&x);
        for h in [1e-5, 1e-6] {
            let moved: [f64; 4] = core::array::from_fn(|i| x[i] + h * dir[i]);
            let f1 = system(&moved);
            for i in 0..4 {
                let predicted: f64 = (0..4).map(|j| jac[i][j] * dir[j]).sum::<f64>() * h;
                assert!(((f1[i] - f0[i]) - predicted).abs() < 10.0 * h * h, "h = {h}, row {i}");
            }
        }
    }

    #[test]
    fn linear_solver() {
        let a = [[2.0, 1.0, 0.0, 0.0], [0.0, 0.0, 3.0, 1.0], [1.0, 0.0, 0.0, 2.0], [0.0, 4.0, 1.0, 0.0]];
        let x = [1.0, -2.0, 0.5, 3.0];
        let b = core::array::from_fn(|i| (0..4).map(|j| a[i][j] * x[j]).sum());
        let got = solve_linear(a, b).unwrap();
        assert!(got.iter().zip(x).all(|(g, e)| close(*g, e, 1e-14)));
        assert!(solve_linear([[0.0; 4]; 4], [1.0; 4]).is_none());
    }
}
