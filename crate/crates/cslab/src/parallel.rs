//! Parallel drivers. Work items are computed on a rayon pool, collected in
//! index order and reduced sequentially, so results match the sequential
//! functions in `cslab_core` for any worker count.

use rayon::prelude::*;
use rayon::ThreadPool;

use cslab_core::fit::{merge_starts, multistart_points, solve, MultiStartReport};
use cslab_core::mc::{trial_length, ConvergenceTable, GammaEstimate, LengthSums};
use cslab_core::scaling::{profile_member, Binning, DensityProfile, ProfileAccumulator, ProfileModel};
use cslab_core::{Engine, Error, Result, Seed};

/// A pool with `threads` workers (rayon's default when `None` or 0).
pub fn pool(threads: Option<usize>) -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool")
}

pub fn estimate_gamma(pool: &ThreadPool, n: usize, trials: u64, master: u64, engine: Engine, c: f64) -> Result<GammaEstimate> {
    if n == 0 {
        return Err(Error::OutOfRange { what: "n", value: 0, min: 1, max: i64::MAX });
    }
    if trials == 0 {
        return Err(Error::OutOfRange { what: "trials", value: 0, min: 1, max: i64::MAX });
    }
    let lengths: Vec<usize> =
        pool.install(|| (0..trials).into_par_iter().map(|i| trial_length(n, master, i, engine)).collect::<Result<_>>())?;
    let mut sums = LengthSums::default();
    for l in lengths {
        sums.push(l);
    }
    Ok(sums.estimate(n, c))
}

pub fn convergence_table(
    pool: &ThreadPool,
    ns: &[usize],
    trials: u64,
    master: u64,
    engine: Engine,
    c: f64,
) -> Result<ConvergenceTable> {
    let estimates = ns.iter().map(|&n| estimate_gamma(pool, n, trials, master, engine, c)).collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::from_estimates(estimates))
}

/// Ensemble profile; member `i` uses `Seed::new(master, i)`.
pub fn empirical_profile(
    pool: &ThreadPool,
    model: ProfileModel,
    n: usize,
    members: usize,
    bins: usize,
    master: u64,
) -> Result<DensityProfile> {
    let binning = Binning::new(n, bins)?;
    let profiles: Vec<_> = pool.install(|| {
        (0..members)
            .into_par_iter()
            .map(|i| profile_member(model, &binning, Seed::new(master, i as u64)))
            .collect::<Result<_>>()
    })?;
    let mut acc = ProfileAccumulator::new(model, &binning);
    for p in &profiles {
        acc.push(p);
    }
    Ok(acc.finish())
}

pub fn solve_multistart(pool: &ThreadPool) -> Result<MultiStartReport> {
    let outcomes: Vec<_> = pool.install(|| multistart_points().par_iter().map(|&p| solve(Some(p))).collect());
    merge_starts(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_sequential_for_any_worker_count() {
        let seq = cslab_core::mc::estimate_gamma(300, 40, 9, Engine::BitParallel, 1.0).unwrap();
        for threads in [1, 3] {
            let p = pool(Some(threads));
            assert_eq!(estimate_gamma(&p, 300, 40, 9, Engine::BitParallel, 1.0).unwrap(), seq);
        }
        let model = ProfileModel::B { p2: 0.5 };
        let seq = cslab_core::scaling::empirical_profile(model, 1000, 6, 201, 2).unwrap();
        assert_eq!(empirical_profile(&pool(Some(2)), model, 1000, 6, 201, 2).unwrap(), seq);
        assert_eq!(solve_multistart(&pool(Some(2))).unwrap(), cslab_core::fit::solve_multistart().unwrap());
    }
}
