//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use serde_json::Value;

use cslab::parallel;
use cslab_core::fit::{arratia_steele, closed_form, solve, solve_multistart};
use cslab_core::lcs::{lcs, lcs_bitparallel, lcs_bruteforce, lcs_dp, random_pair};
use cslab_core::mc::exact_small_n;
use cslab_core::model_b::{run_ring, RingConfig};
use cslab_core::network::{bottom_output_particles, crossing_report, crossing_reports};
use cslab_core::scaling::{transported_mass, ProfileModel, Quadratic, DEFAULT_BINS};
use cslab_core::{BinaryString, Engine, Seed};

const MASTER: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Truncation to six decimals matches the printed digits.
fn six_digits(x: f64, printed: f64) -> bool {
    (x * 1e6).floor() == (printed * 1e6).round()
}

fn closed_form_reproduction() -> Outcome {
    let start = Instant::now();
    let s = closed_form();
    let elapsed = start.elapsed();
    let digits = [(s.u, 0.407025), (s.gamma, 0.814050), (s.p0, 0.457987), (s.p1, 0.561206), (s.p2, 0.528838)];
    let digits_ok = digits.iter().all(|&(x, p)| six_digits(x, p));
    let passed = digits_ok && s.max_residual() < 1e-12 && elapsed < Duration::from_millis(1);
    outcome(
        passed,
        format!(
            "u={:.9} gamma={:.9} p0={:.9} p1={:.9} p2={:.9} max|E|={:.2e} in {:?}",
            s.u,
            s.gamma,
            s.p0,
            s.p1,
            s.p2,
            s.max_residual(),
            elapsed
        ),
    )
}

fn solver_reproduction() -> Outcome {
    let start = Instant::now();
    let solved = match solve(None) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("solve failed: {e}")),
    };
    let multi = match solve_multistart() {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("multistart failed: {e}")),
    };
    let elapsed = start.elapsed();
    let exact = closed_form();
    let coord_err = solved.point().iter().zip(exact.point()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let e2 = solved.residuals[1].abs();
    let passed = coord_err <= 1e-6
        && multi.solutions.len() == 16
        && multi.spread <= 1e-8
        && e2 < 1e-10
        && elapsed < Duration::from_secs(1);
    outcome(
        passed,
        format!(
            "max coordinate error {:.2e}, {}/16 starts converged with spread {:.2e}, |E2|={:.2e}, {} iterations, {:?}",
            coord_err,
            multi.solutions.len(),
            multi.spread,
            e2,
            solved.iterations,
            elapsed
        ),
    )
}

fn arratia_steele_values() -> Outcome {
    let s = arratia_steele();
    let u = SQRT_2 - 1.0;
    let passed = (s.u - u).abs() <= 1e-12
        && (s.gamma - 2.0 * u).abs() <= 1e-12
        && six_digits(s.gamma, 0.828427)
        && s.residuals[2..].iter().all(|e| e.abs() > 1e-3);
    outcome(
        passed,
        format!(
            "gamma={:.12} E3..E5=[{:+.6e}, {:+.6e}, {:+.6e}], above known bound: {}",
            s.gamma,
            s.residuals[2],
            s.residuals[3],
            s.residuals[4],
            s.exceeds_known_upper_bound()
        ),
    )
}

fn crossing_exactness() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    let mut exceptions = 0;
    for i in 0..500u64 {
        let n = 1 + (i as usize % 32);
        let (a, b) = random_pair(2 * n, 2 * n, Seed::new(MASTER, i));
        let reports = crossing_reports(&a, &b, n).expect("strings long enough");
        if reports.len() != 2 * n + 1 {
            exceptions += 1;
        }
        for r in reports {
            cases += 1;
            exceptions += !r.holds() as usize;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        exceptions == 0 && elapsed < Duration::from_secs(30),
        format!("{cases} (pair, k) cases over 500 pairs, {exceptions} exceptions, {elapsed:?}"),
    )
}

fn engine_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = Seed::new(MASTER, 1 << 40).rng();
    let mut mismatches = 0;
    for i in 0..1000u64 {
        let m = (rng.next_u64() % 513) as usize;
        let n = (rng.next_u64() % 513) as usize;
        let (a, b) = random_pair(m, n, Seed::new(MASTER ^ 0xE4, i));
        mismatches += (lcs_dp(&a, &b).length != lcs_bitparallel(&a, &b).length) as usize;
    }
    // Every pair with both lengths up to 4, then random pairs with a short side up to 12.
    let strings = |len: usize| (0..1u32 << len).map(move |x| BinaryString::from_bools((0..len).map(|k| x >> k & 1 == 1)));
    let mut brute_cases = 0;
    for m in 0..=4 {
        for a in strings(m) {
            for n in 0..=4 {
                for b in strings(n) {
                    brute_cases += 1;
                    let dp = lcs_dp(&a, &b).length;
                    let bf = lcs_bruteforce(&a, &b).expect("small").length;
                    mismatches += (dp != bf || dp != lcs_bitparallel(&a, &b).length) as usize;
                }
            }
        }
    }
    for i in 0..3000u64 {
        let short = (rng.next_u64() % 13) as usize;
        let long = (rng.next_u64() % 200) as usize;
        let (a, b) = random_pair(short, long, Seed::new(MASTER ^ 0xB7, i));
        let (a, b) = if i % 2 == 0 { (a, b) } else { (b, a) };
        brute_cases += 1;
        let dp = lcs_dp(&a, &b).length;
        let bf = lcs_bruteforce(&a, &b).expect("short side at most 12").length;
        mismatches += (dp != bf || dp != lcs_bitparallel(&a, &b).length) as usize;
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(60),
        format!("1000 pairs up to 512 and {brute_cases} brute-force pairs, {mismatches} mismatches, {elapsed:?}"),
    )
}

fn four_by_four_example() -> Outcome {
    let a: BinaryString = "1000".parse().expect("valid");
    let b: BinaryString = "0100".parse().expect("valid");
    let lengths: Vec<usize> =
        [Engine::Dp, Engine::BitParallel, Engine::BruteForce].iter().map(|&e| lcs(&a, &b, e).expect("small").length).collect();
    let bottom = bottom_output_particles(&a, &b);
    let crossing = crossing_report(&a, &b, 4, 4).expect("valid split");
    let passed = lengths.iter().all(|&l| l == 3) && bottom == 3 && crossing.particles_at_or_above == 1 && crossing.holds();
    outcome(
        passed,
        format!("lcs {lengths:?}, bottom outputs {bottom}, diagonal crossings {}", crossing.particles_at_or_above),
    )
}

fn model_b_stationarity() -> Outcome {
    let start = Instant::now();
    let config = RingConfig::new(0.5, 10_000, 1_000, 10_000, MASTER).expect("valid config");
    let ring = match run_ring(&config, |_| {}) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let elapsed = start.elapsed();
    let u = SQRT_2 - 1.0;
    let even = ring.even_density.measured;
    let fbar = 1.0 - ring.swap_rate.measured;
    let passed = (even / u - 1.0).abs() <= 0.01 && (fbar / 0.828427 - 1.0).abs() <= 0.01 && elapsed < Duration::from_secs(120);
    outcome(
        passed,
        format!(
            "even-site density {:.6} ± {:.6} (target {:.6}), fbar {:.6} ± {:.6} (target 0.828427), max |z| {:.2}, {:?}",
            even,
            ring.even_density.stderr,
            u,
            fbar,
            ring.swap_rate.stderr,
            ring.max_abs_z(),
            elapsed
        ),
    )
}

fn monte_carlo_gamma(pool: &rayon::ThreadPool) -> Outcome {
    let start = Instant::now();
    let big = match parallel::estimate_gamma(pool, 10_000, 100, MASTER, Engine::BitParallel, 1.0) {
        Ok(e) => e,
        Err(e) => return outcome(false, format!("estimate failed: {e}")),
    };
    let mut small = Vec::new();
    let mut small_ok = true;
    for n in 1..=6 {
        let est = parallel::estimate_gamma(pool, n, 1_000_000, MASTER, Engine::BitParallel, 1.0).expect("valid sizes");
        let exact = exact_small_n(n).expect("small n").value;
        let z = (est.mean - exact) / est.stderr;
        small_ok &= z.abs() <= 4.0;
        small.push(format!("n={n}: {:+.2}σ", z));
    }
    let elapsed = start.elapsed();
    let passed = (0.79..=0.82).contains(&big.mean) && small_ok && elapsed < Duration::from_secs(300);
    outcome(
        passed,
        format!("n=10^4 mean {:.6} ± {:.6}; small n vs exact [{}]; {:?}", big.mean, big.stderr, small.join(", "), elapsed),
    )
}

fn scaling_checks(pool: &rayon::ThreadPool) -> Outcome {
    let start = Instant::now();
    let mass = match transported_mass(&Quadratic) {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("transported mass failed: {e}")),
    };
    let members = 1024;
    let p = match parallel::empirical_profile(pool, ProfileModel::Cs, 10_000, members, DEFAULT_BINS, MASTER) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("profile failed: {e}")),
    };
    let elapsed = start.elapsed();
    let (half_dev, half_se) = p.skew.at_half;
    let passed = mass.difference.abs() <= 1e-6
        && (p.peak_density - 0.5).abs() <= 0.005
        && p.skew.within(3.0)
        && half_dev.abs() <= 3.0 * half_se
        && elapsed < Duration::from_secs(300);
    outcome(
        passed,
        format!(
            "toy flux mass {:.12} vs f(ỹ) {:.12}; model CS n=10^4 ({} members): y(0) = {:.5} ± {:.5}, skew {:+.2e} ± {:.2e}, at x=±1/2 {:+.2e} ± {:.2e}, mass {:.5}; {:?}",
            mass.integral,
            mass.peak_flux,
            members,
            p.peak_density,
            p.peak_density_stderr,
            p.skew.mean,
            p.skew.stderr,
            half_dev,
            half_se,
            p.transported_mass,
            elapsed
        ),
    )
}

fn exact_invariant_suite() -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cslab::run(["cslab", "verify", "--suite", "exact"], &mut out, &mut err);
    let report: Value = match serde_json::from_slice(&out) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("exit {code}, unreadable report: {e}")),
    };
    let checks = report["checks"].as_array().cloned().unwrap_or_default();
    let failed: Vec<&str> = checks.iter().filter(|c| c["passed"] != true).filter_map(|c| c["name"].as_str()).collect();
    outcome(
        code == 0 && report["passed"] == true && failed.is_empty() && !checks.is_empty(),
        format!("exit {code}, {} checks, failed: {failed:?}", checks.len()),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let pool = parallel::pool(None);
    let criteria: Vec<Criterion> = vec![
        ("closed_form_reproduction", Box::new(closed_form_reproduction)),
        ("solver_reproduction", Box::new(solver_reproduction)),
        ("arratia_steele_values", Box::new(arratia_steele_values)),
        ("crossing_count_exactness", Box::new(crossing_exactness)),
        ("engine_equivalence", Box::new(engine_equivalence)),
        ("four_by_four_example", Box::new(four_by_four_example)),
        ("model_b_stationarity", Box::new(model_b_stationarity)),
        ("monte_carlo_gamma", Box::new(|| monte_carlo_gamma(&pool))),
        ("scaling_checks", Box::new(|| scaling_checks(&pool))),
        ("exact_invariant_suite", Box::new(exact_invariant_suite)),
    ];
    let mut failures = 0;
    for (name, check) in &criteria {
        let o = check();
        failures += !o.passed as usize;
        println!("{} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
