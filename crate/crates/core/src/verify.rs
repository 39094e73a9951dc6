//! Zero-tolerance invariant suite over deterministic pseudo-random inputs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bits::PackedBits;
use crate::fit::closed_form;
use crate::lcs::{lcs_bitparallel, lcs_bruteforce, lcs_dp, random_pair, random_string};
use crate::model_b::{halfstep, sample_stationary, ModelBParams, TypeTally};
use crate::network::{
    bottom_output_particles, cell_type, crossing_reports, dualize, evolve_step_ic, BernoulliRule, CellType,
    DiagonalEvolution, StringPairRule,
};
use crate::rng::Seed;
use crate::{BinaryString, SiteSequence};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, failures: usize, cases: usize) -> Check {
    Check { name, passed: failures == 0, detail: format!("{failures} failures in {cases} cases") }
}

fn parse(s: &str) -> BinaryString {
    s.parse().expect("literal binary string")
}

fn cell_parity() -> Check {
    let mut failures = 0;
    for bits in 0..16u32 {
        let [a0, a1, b0, b1] = [0, 1, 2, 3].map(|k| bits >> k & 1 == 1);
        let t = |a, b| cell_type(a, b) == CellType::Mismatch;
        if t(a0, b0) ^ t(a0, b1) ^ t(a1, b0) ^ t(a1, b1) {
            failures += 1;
        }
    }
    check("cell_type_parity_2x2", failures, 16)
}

fn conservation(master: u64) -> Check {
    let mut failures = 0;
    let mut cases = 0;
    for i in 0..20 {
        let (a, b) = random_pair(40 + i, 70 - i, Seed::new(master, i as u64));
        let mut evo = DiagonalEvolution::new(SiteSequence::step_initial(a.len(), b.len()), StringPairRule::new(&a, &b));
        let count = evo.state().particles();
        for _ in 0..a.len() + b.len() {
            evo.halfstep();
            cases += 1;
            failures += (evo.state().particles() != count) as usize;
        }
        let rule = BernoulliRule { key: Seed::new(master, 1000 + i as u64).state(), rate: 0.5 };
        let mut evo = DiagonalEvolution::new(SiteSequence::step_initial(100, 100), rule);
        for _ in 0..100 {
            evo.halfstep();
            cases += 1;
            failures += (evo.state().particles() != 100) as usize;
        }
        let mut ring = sample_stationary(130, 0.4, Seed::new(master, 2000 + i as u64)).expect("even length");
        let params = ModelBParams::uniform(0.5).expect("valid rate");
        let count = ring.particles();
        for _ in 0..100 {
            halfstep(&mut ring, &params, i as u64, None).expect("even length");
            cases += 1;
            failures += (ring.particles() != count) as usize;
        }
    }
    check("particle_conservation_per_halfstep", failures, cases)
}

fn duality(master: u64) -> (Check, Check, Check) {
    let mut involution = 0;
    let mut commutation = 0;
    for i in 0..30u64 {
        let len = 1 + i as usize * 7;
        let bits = random_string(len, Seed::new(master, i));
        let s = SiteSequence::new(PackedBits::from_bools(bits.iter()), i as i64 - 15, i);
        involution += (dualize(&dualize(&s)) != s) as usize;

        let n = 1 + i as usize;
        let (a, b) = random_pair(2 * n, 2 * n, Seed::new(master, 100 + i));
        let left = dualize(&evolve_step_ic(&a, &b, n).expect("long enough"));
        commutation += (left != evolve_step_ic(&b, &a, n).expect("long enough")) as usize;
    }
    let self_dual = (0..50).filter(|&m| dualize(&SiteSequence::step_initial(m, m)) != SiteSequence::step_initial(m, m)).count();
    (
        check("duality_involution", involution, 30),
        check("step_ic_self_duality", self_dual, 50),
        check("evolution_commutes_with_duality", commutation, 30),
    )
}

fn pseudo_rates(master: u64) -> Check {
    let start = sample_stationary(256, 0.41, Seed::new(master, 0)).expect("even length");
    let trajectory = |p0, p1| {
        let params = ModelBParams::new(0.53, p0, p1).expect("valid rates");
        let mut s = start.clone();
        let mut tally = TypeTally::default();
        let mut path = Vec::new();
        for _ in 0..200 {
            halfstep(&mut s, &params, master, Some(&mut tally)).expect("even length");
            path.push(s.values().clone());
        }
        path
    };
    let base = trajectory(0.5, 0.5);
    let failures = [(0.0, 1.0), (1.0, 0.0), (0.123, 0.987)].iter().filter(|&&(p0, p1)| trajectory(p0, p1) != base).count();
    check("pseudo_rate_invisibility", failures, 3)
}

fn crossing(master: u64) -> Check {
    let mut failures = 0;
    let mut cases = 0;
    for i in 0..40u64 {
        let n = 1 + (i as usize % 32);
        let (a, b) = random_pair(2 * n, 2 * n, Seed::new(master, i));
        for r in crossing_reports(&a, &b, n).expect("long enough") {
            cases += 1;
            failures += !r.holds() as usize;
        }
    }
    check("crossing_equals_k_minus_lcs", failures, cases)
}

fn engines(master: u64) -> (Check, Check) {
    let mut engine_failures = 0;
    let mut bottom_failures = 0;
    for i in 0..60u64 {
        let (m, n) = (i as usize % 13, (i as usize * 5) % 13);
        let (a, b) = random_pair(m, n, Seed::new(master, i));
        let dp = lcs_dp(&a, &b).length;
        let brute = lcs_bruteforce(&a, &b).expect("small").length;
        engine_failures += (dp != lcs_bitparallel(&a, &b).length || dp != brute) as usize;
        bottom_failures += (bottom_output_particles(&a, &b) != dp) as usize;
    }
    for i in 0..20u64 {
        let (a, b) = random_pair(100 + 37 * i as usize, 300 - 11 * i as usize, Seed::new(master, 500 + i));
        engine_failures += (lcs_dp(&a, &b).length != lcs_bitparallel(&a, &b).length) as usize;
    }
    (check("engine_equality", engine_failures, 80), check("bottom_outputs_equal_lcs", bottom_failures, 60))
}

fn figure_example() -> Check {
    let (a, b) = (parse("1000"), parse("0100"));
    let lcs = lcs_dp(&a, &b).length;
    let bottom = bottom_output_particles(&a, &b);
    let crossed = evolve_step_ic(&a, &b, 4).expect("long enough").particles_at_or_above(0);
    Check {
        name: "four_by_four_example",
        passed: lcs == 3 && bottom == 3 && crossed == 1,
        detail: format!("lcs {lcs}, bottom outputs {bottom}, crossings {crossed}"),
    }
}

fn closed_form_residuals() -> Check {
    let s = closed_form();
    Check {
        name: "closed_form_residuals",
        passed: s.max_residual() < 1e-12,
        detail: format!("max |E| = {:e}", s.max_residual()),
    }
}

/// Runs every exact check; inputs are derived from `master`.
pub fn exact_suite(master: u64) -> Vec<Check> {
    let (involution, self_dual, commutation) = duality(master);
    let (engine, bottom) = engines(master);
    alloc::vec![
        cell_parity(),
        conservation(master),
        involution,
        self_dual,
        commutation,
        pseudo_rates(master),
        crossing(master),
        engine,
        bottom,
        figure_example(),
        closed_form_residuals(),
    ]
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
