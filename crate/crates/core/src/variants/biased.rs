//! Two deliberately incorrect treatments of level ties, for demonstration only.
//!
//! Version 1 retires exactly the `k` lowest replicas (ties broken by label)
//! and never branches from replicas sitting exactly at the level. Version 2
//! also branches from replicas at the level and branches paths at the first
//! index with `xi >= z` instead of `xi > z`. Both report
//! `((n_rep - k) / n_rep)^Q_iter * P_corr`, which is biased when ties occur.
//! On runs without ties, Version 1 reproduces the classical algorithm draw
//! for draw.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gams::{finish, initialize_system, Audit, GamsConfig, LevelStrategy, RunResult};
use crate::level::ExtendedLevel;
use crate::markov_path::{ChainModel, MarkovChain, StoppedPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasedVariantKind {
    Version1,
    Version2,
}

#[derive(Debug, Clone)]
pub struct BiasedRunResult<S> {
    pub result: RunResult<S>,
    /// Resamplings whose non-strict branch index differed from the strict one (Version 2).
    pub boundary_branches: usize,
    /// Iterations where more than `k` replicas sat at or below the level.
    pub tied_iterations: usize,
}

/// Runs a biased variant on a Markov-chain model.
pub fn run_biased<C: MarkovChain, R: Rng>(
    model: &ChainModel<C>,
    cfg: &GamsConfig,
    kind: BiasedVariantKind,
    rng: &mut R,
) -> Result<BiasedRunResult<StoppedPath<C::Point>>> {
    if cfg.level_strategy != LevelStrategy::FullSort {
        return Err(Error::config("biased variants only support the full-sort level strategy"));
    }
    let mut system = initialize_system(model, cfg, rng)?;
    let n = cfg.n_rep;
    let factor = (n - cfg.k) as f64 / n as f64;
    let mut audit = Audit::new(n);
    audit.record(&system);
    let mut levels = Vec::new();
    let mut boundary_branches = 0;
    let mut tied_iterations = 0;
    let extinct;

    loop {
        // Labels are unique, so the k smallest (level, label) keys form a well-defined set.
        let mut order: Vec<(ExtendedLevel, u64, usize)> =
            system.working.iter().enumerate().map(|(i, r)| (r.max_level, r.label, i)).collect();
        let (below, kth, _) = order.select_nth_unstable(cfg.k - 1);
        let z = kth.0.value();
        let mut lowest = vec![false; system.working.len()];
        for &(_, _, i) in below.iter().chain(std::iter::once(&*kth)) {
            lowest[i] = true;
        }
        let pool: Vec<usize> = (0..system.working.len())
            .filter(|&i| {
                let l = system.working[i].max_level.value();
                !lowest[i]
                    && match kind {
                        BiasedVariantKind::Version1 => l > z,
                        BiasedVariantKind::Version2 => l >= z,
                    }
            })
            .collect();
        let level = if system.working.iter().all(|r| r.max_level.value() <= z) {
            ExtendedLevel::INFINITY
        } else {
            ExtendedLevel::new(z)
        };
        levels.push(level);
        if level.value() > cfg.z_max || cfg.stop_after.is_some_and(|q| system.iteration >= q) {
            extinct = level.is_pos_infinite() && system.working.iter().all(|r| r.max_level.value() <= cfg.z_max);
            break;
        }
        if pool.is_empty() {
            *levels.last_mut().unwrap() = ExtendedLevel::INFINITY;
            extinct = system.working.iter().all(|r| r.max_level.value() <= cfg.z_max);
            break;
        }
        if system.iteration >= cfg.max_iterations {
            return Err(Error::MaxIterations {
                max_iterations: cfg.max_iterations,
                k_history: system.k_history,
            });
        }
        system.current_level = level;
        if system.working.iter().filter(|r| r.max_level.value() <= z).count() > cfg.k {
            tied_iterations += 1;
        }

        let mut new_index = Vec::with_capacity(lowest.len());
        let mut kept = 0;
        for &low in &lowest {
            new_index.push(kept);
            kept += usize::from(!low);
        }
        let mut visit = lowest.iter();
        let retired: Vec<_> = system
            .working
            .extract_if(.., |_| *visit.next().expect("one flag per replica"))
            .collect();
        system.retire(retired);
        system.k_history.push(cfg.k);
        let parents: Vec<usize> = (0..cfg.k).map(|_| new_index[pool[rng.random_range(0..pool.len())]]).collect();
        for r in system.working.iter_mut() {
            r.weight *= factor;
        }

        for p in parents {
            let parent = &system.working[p].state;
            let child = match kind {
                BiasedVariantKind::Version1 => model.branch_resample(parent, z, rng)?,
                BiasedVariantKind::Version2 => {
                    let t = parent
                        .entrance_time_non_strict(z)
                        .expect("parents have a level at least z");
                    if parent.entrance_time(z) != Some(t) {
                        boundary_branches += 1;
                    }
                    model.continue_from(parent, t, rng)?
                }
            };
            let level = child.max_level();
            system.push_child(p, child, level);
        }
        system.iteration += 1;
        audit.record(&system);
    }
    system.current_level = *levels.last().unwrap();
    let result = finish(model, system, levels, extinct, audit, None);
    Ok(BiasedRunResult {
        result,
        boundary_branches,
        tied_iterations,
    })
}
