//! The generic splitting engine.
//!
//! A [`Model`] supplies an initial sampler, the maximum level of a state and a
//! level-indexed resampling kernel. The engine keeps a weighted system of
//! replicas, repeatedly retires every working replica whose maximum level is
//! at or below the current level, branches survivors to replace them, and
//! stops once the level exceeds `z_max` (or the population goes extinct).
//!
//! Weights follow the rule `G' = G / E[B | F]` where `B` is the branching
//! number of a survivor. With the default uniform parent draw this is the
//! familiar `(n_rep - K) / n_rep` factor, and the sum of all weights (working
//! and retired) stays equal to one.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::ExtendedLevel;

/// What a rare-event model provides to the engine.
///
/// Implementations must satisfy two contracts:
/// `resample(s, z)` returns a state `s'` with `prefix_equal(s, s', z)`, and
/// when `max_level(s) <= z` it returns a copy of `s`.
pub trait Model: Sync {
    type State: Clone + Send + Sync;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::State>;

    fn max_level(&self, state: &Self::State) -> f64;

    /// Draw from the resampling kernel at `level`, branching from `state`.
    fn resample<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        level: f64,
        rng: &mut R,
    ) -> Result<Self::State>;

    /// Whether `a` and `b` agree on everything observable up to `level`.
    fn prefix_equal(&self, a: &Self::State, b: &Self::State, level: f64) -> bool;

    /// The indicator of the rare event (reaching the target set).
    fn reached_target(&self, state: &Self::State) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Working,
    Retired,
}

#[derive(Debug, Clone)]
pub struct Replica<S> {
    pub label: u64,
    pub state: S,
    pub weight: f64,
    pub status: Status,
    pub parent: Option<u64>,
    pub birth_iteration: usize,
    pub max_level: ExtendedLevel,
}

/// How the next level is computed from the working replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelStrategy {
    /// k-th order statistic over all working replicas.
    #[default]
    FullSort,
    /// k-th order statistic over a uniformly drawn subset of this size.
    RandomSubset { subset_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamsConfig {
    pub n_rep: usize,
    pub k: usize,
    pub z_max: f64,
    pub level_strategy: LevelStrategy,
    pub max_iterations: usize,
    /// Keep full retired replicas (needed for observables not supported on the target event).
    pub retain_retired: bool,
    pub record_ancestry: bool,
    /// Stop after this many iterations even if the level is still below `z_max`.
    pub stop_after: Option<usize>,
}

impl GamsConfig {
    pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

    pub fn new(n_rep: usize, k: usize, z_max: f64) -> Self {
        Self {
            n_rep,
            k,
            z_max,
            level_strategy: LevelStrategy::FullSort,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            retain_retired: false,
            record_ancestry: true,
            stop_after: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rep < 2 {
            return Err(Error::config(format!("n_rep must be >= 2, got {}", self.n_rep)));
        }
        if self.k < 1 || self.k >= self.n_rep {
            return Err(Error::config(format!(
                "k must lie in [1, n_rep - 1] = [1, {}], got {}",
                self.n_rep - 1,
                self.k
            )));
        }
        if self.z_max.is_nan() {
            return Err(Error::config("z_max must not be NaN"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be positive"));
        }
        if let LevelStrategy::RandomSubset { subset_size } = self.level_strategy {
            if subset_size < self.k || subset_size > self.n_rep {
                return Err(Error::config(format!(
                    "subset_size must lie in [k, n_rep] = [{}, {}], got {subset_size}",
                    self.k, self.n_rep
                )));
            }
        }
        Ok(())
    }
}

/// Children-parent links, indexed by label. Roots have no parent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ancestry {
    parents: Vec<Option<u64>>,
}

impl Ancestry {
    fn record(&mut self, label: u64, parent: Option<u64>) {
        let idx = (label - 1) as usize;
        if self.parents.len() <= idx {
            self.parents.resize(idx + 1, None);
        }
        self.parents[idx] = parent;
    }

    pub fn parent(&self, label: u64) -> Option<u64> {
        self.parents.get((label - 1) as usize).copied().flatten()
    }

    /// Follows parent links back to an initial replica.
    pub fn root(&self, mut label: u64) -> u64 {
        while let Some(p) = self.parent(label) {
            label = p;
        }
        label
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }
}

/// The weighted population at one iteration.
#[derive(Debug, Clone)]
pub struct ReplicaSystem<S> {
    pub n_rep: usize,
    pub working: Vec<Replica<S>>,
    /// Full retired replicas, only populated when `retain_retired` is set.
    pub retired: Vec<Replica<S>>,
    pub retired_count: usize,
    pub retired_weight: f64,
    pub current_level: ExtendedLevel,
    pub iteration: usize,
    pub k_history: Vec<usize>,
    pub ancestry: Option<Ancestry>,
    retain_retired: bool,
    next_label: u64,
}

impl<S: Clone> ReplicaSystem<S> {
    pub fn total_weight(&self) -> f64 {
        self.retired_weight + self.working.iter().map(|r| r.weight).sum::<f64>()
    }

    pub fn next_label(&self) -> u64 {
        self.next_label
    }

    fn fresh_label(&mut self) -> u64 {
        let l = self.next_label;
        self.next_label += 1;
        l
    }

    /// Moves the working replica at each index (ascending) into the retired set.
    pub(crate) fn retire(&mut self, replicas: Vec<Replica<S>>) {
        for mut r in replicas {
            r.status = Status::Retired;
            self.retired_count += 1;
            self.retired_weight += r.weight;
            if self.retain_retired {
                self.retired.push(r);
            }
        }
    }

    /// Appends a child of `working[parent_idx]` holding `state`, inheriting its weight.
    pub(crate) fn push_child(&mut self, parent_idx: usize, state: S, max_level: f64) {
        let label = self.fresh_label();
        let parent = &self.working[parent_idx];
        let child = Replica {
            label,
            weight: parent.weight,
            status: Status::Working,
            parent: Some(parent.label),
            birth_iteration: self.iteration + 1,
            max_level: ExtendedLevel::new(max_level),
            state,
        };
        if let Some(a) = self.ancestry.as_mut() {
            a.record(label, child.parent);
        }
        self.working.push(child);
    }
}

/// `n_rep` i.i.d. replicas with uniform weights and labels `1..=n_rep`.
pub fn initialize_system<M: Model, R: Rng + ?Sized>(
    model: &M,
    cfg: &GamsConfig,
    rng: &mut R,
) -> Result<ReplicaSystem<M::State>> {
    cfg.validate()?;
    let w = 1.0 / cfg.n_rep as f64;
    let mut ancestry = cfg.record_ancestry.then(Ancestry::default);
    let mut working = Vec::with_capacity(cfg.n_rep);
    for i in 0..cfg.n_rep {
        let label = i as u64 + 1;
        let state = model.sample_initial(rng)?;
        let max_level = ExtendedLevel::new(model.max_level(&state));
        if let Some(a) = ancestry.as_mut() {
            a.record(label, None);
        }
        working.push(Replica {
            label,
            state,
            weight: w,
            status: Status::Working,
            parent: None,
            birth_iteration: 0,
            max_level,
        });
    }
    Ok(ReplicaSystem {
        n_rep: cfg.n_rep,
        working,
        retired: Vec::new(),
        retired_count: 0,
        retired_weight: 0.0,
        current_level: ExtendedLevel::NEG_INFINITY,
        iteration: 0,
        k_history: Vec::new(),
        ancestry,
        retain_retired: cfg.retain_retired,
        next_label: cfg.n_rep as u64 + 1,
    })
}

/// k-th smallest value of `levels` (1-based `k`), by partial selection.
pub fn kth_smallest(levels: &mut [f64], k: usize) -> f64 {
    assert!(k >= 1 && k <= levels.len(), "k = {k} out of range 1..={}", levels.len());
    let (_, kth, _) = levels.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// The next level: the k-th order statistic of the working maximum levels, or
/// `+inf` when every working replica sits at or below it (extinction).
pub fn compute_level<S: Clone, R: Rng + ?Sized>(
    system: &ReplicaSystem<S>,
    k: usize,
    strategy: LevelStrategy,
    rng: &mut R,
) -> Result<ExtendedLevel> {
    let n = system.working.len();
    let z = match strategy {
        LevelStrategy::FullSort => {
            if n < k {
                return Err(Error::invalid(format!("{n} working replicas, need at least k = {k}")));
            }
            let mut levels: Vec<f64> = system.working.iter().map(|r| r.max_level.value()).collect();
            kth_smallest(&mut levels, k)
        }
        LevelStrategy::RandomSubset { subset_size } => {
            if subset_size < k || subset_size > n {
                return Err(Error::invalid(format!(
                    "subset of {subset_size} cannot provide the k = {k} order statistic among {n} replicas"
                )));
            }
            let mut levels: Vec<f64> = rand::seq::index::sample(rng, n, subset_size)
                .into_iter()
                .map(|i| system.working[i].max_level.value())
                .collect();
            levels.sort_unstable_by(f64::total_cmp);
            levels[k - 1]
        }
    };
    if system.working.iter().all(|r| r.max_level.value() <= z) {
        Ok(ExtendedLevel::INFINITY)
    } else {
        Ok(ExtendedLevel::new(z))
    }
}

/// Output of a branching policy for one splitting step.
#[derive(Debug, Clone, PartialEq)]
pub struct Branching {
    /// For each new replica, the index of its parent among the survivors.
    pub parents: Vec<usize>,
    /// For each survivor, `1 / E[B | F]` with `B` its branching number.
    pub weight_factors: Vec<f64>,
}

/// Extension point for the branching rule.
///
/// A policy sees the survivors (working replicas strictly above the level)
/// and the number of replicas just retired, and returns parent assignments
/// for the new replicas together with the weight factor `1 / E[B | F]` of
/// each survivor. Every survivor must have `E[B | F] > 0` given only the
/// information available at the current level; survivors are never killed.
pub trait BranchingPolicy<S> {
    fn branch(&self, survivors: &[Replica<S>], retired: usize, rng: &mut dyn RngCore) -> Branching;
}

/// Classical rule: one independent uniform parent per retired replica.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformBranching;

impl<S> BranchingPolicy<S> for UniformBranching {
    fn branch(&self, survivors: &[Replica<S>], retired: usize, rng: &mut dyn RngCore) -> Branching {
        let s = survivors.len();
        let n = s + retired;
        let parents = (0..retired).map(|_| rng.random_range(0..s)).collect();
        Branching {
            parents,
            weight_factors: vec![(n - retired) as f64 / n as f64; s],
        }
    }
}

/// Result of [`split_step`], consumed by [`resample_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingPlan {
    pub level: f64,
    pub retired: usize,
    pub survivors: usize,
    /// Survivor index of the parent of each new replica.
    pub parents: Vec<usize>,
}

impl BranchingPlan {
    /// Branching number `1 + children` of each survivor.
    pub fn branching_numbers(&self) -> Vec<usize> {
        let mut b = vec![1; self.survivors];
        for &p in &self.parents {
            b[p] += 1;
        }
        b
    }
}

/// Retires every working replica at or below `level`, draws parents among the
/// survivors and rescales the survivors' weights.
pub fn split_step<S: Clone, R: Rng, P: BranchingPolicy<S> + ?Sized>(
    system: &mut ReplicaSystem<S>,
    level: ExtendedLevel,
    policy: &P,
    rng: &mut R,
) -> Result<BranchingPlan> {
    if !level.is_finite() {
        return Err(Error::invalid(format!("cannot split at non-finite level {level}")));
    }
    let z = level.value();
    if !system.working.iter().any(|r| r.max_level.value() > z) {
        return Err(Error::NoSurvivors { level: z });
    }
    let retired: Vec<_> = system.working.extract_if(.., |r| r.max_level.value() <= z).collect();
    let k = retired.len();
    system.retire(retired);
    system.k_history.push(k);

    let branching = policy.branch(&system.working, k, rng);
    let s = system.working.len();
    if branching.weight_factors.len() != s {
        return Err(Error::invalid(format!(
            "branching policy returned {} weight factors for {s} survivors",
            branching.weight_factors.len()
        )));
    }
    if let Some(&bad) = branching.parents.iter().find(|&&p| p >= s) {
        return Err(Error::invalid(format!("branching policy chose parent {bad} of {s}")));
    }
    for (r, f) in system.working.iter_mut().zip(&branching.weight_factors) {
        if !(*f > 0.0 && f.is_finite()) {
            return Err(Error::invalid(format!("weight factor {f} is not positive and finite")));
        }
        r.weight *= f;
    }
    Ok(BranchingPlan {
        level: z,
        retired: k,
        survivors: s,
        parents: branching.parents,
    })
}

/// Creates the new replicas of `plan` by resampling their parents at the plan's level.
pub fn resample_step<M: Model, R: Rng + ?Sized>(
    system: &mut ReplicaSystem<M::State>,
    model: &M,
    plan: &BranchingPlan,
    rng: &mut R,
) -> Result<()> {
    for &p in &plan.parents {
        let state = model.resample(&system.working[p].state, plan.level, rng)?;
        let level = model.max_level(&state);
        system.push_child(p, state, level);
    }
    system.iteration += 1;
    Ok(())
}

/// Weighted sum of `observable` over the given replicas.
pub fn estimate_observable<'a, S: 'a, I, F>(replicas: I, observable: F) -> f64
where
    I: IntoIterator<Item = &'a Replica<S>>,
    F: Fn(&S) -> f64,
{
    replicas.into_iter().map(|r| r.weight * observable(&r.state)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub label: u64,
    pub max_level: f64,
    pub reached_target: bool,
    pub root: Option<u64>,
}

/// One realization of the algorithm.
#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub p_hat: f64,
    pub p_corr: f64,
    pub q_iter: usize,
    pub k_history: Vec<usize>,
    /// Levels `Z^(0), ..., Z^(q_iter)`; the last one is above `z_max` unless stopped early.
    pub levels: Vec<ExtendedLevel>,
    pub extinct: bool,
    pub n_rep: usize,
    pub final_working: Vec<ReplicaSummary>,
    /// Total weight (working + retired) at each iteration boundary, starting at iteration 0.
    pub per_iteration_weight_sums: Vec<f64>,
    /// Largest gap between a working weight and `(1/n_rep) prod (n_rep - K)/n_rep`, per iteration.
    pub working_weight_deviation: Vec<f64>,
    /// Common weight of the final working replicas (classical rule).
    pub working_weight: f64,
    pub phi_hat: Option<f64>,
    pub working: Vec<Replica<S>>,
    pub retired: Vec<Replica<S>>,
    pub retired_count: usize,
    pub retired_weight: f64,
    pub ancestry: Option<Ancestry>,
}

impl<S> RunResult<S> {
    /// Number of final working replicas that reached the target.
    pub fn target_count(&self) -> usize {
        self.final_working.iter().filter(|r| r.reached_target).count()
    }

    /// `prod_j (n_rep - K^(j)) / n_rep`.
    pub fn survival_product(&self) -> f64 {
        let n = self.n_rep as f64;
        self.k_history.iter().map(|&k| (self.n_rep - k) as f64 / n).product()
    }

    /// All stored replicas, working first.
    pub fn all_replicas(&self) -> impl Iterator<Item = &Replica<S>> {
        self.working.iter().chain(self.retired.iter())
    }
}

/// Classical adaptive multilevel splitting.
pub fn run_ams<M: Model, R: Rng>(
    model: &M,
    cfg: &GamsConfig,
    observable: Option<&dyn Fn(&M::State) -> f64>,
    rng: &mut R,
) -> Result<RunResult<M::State>> {
    run_gams(model, cfg, &UniformBranching, observable, rng)
}

/// The engine with an arbitrary branching policy.
pub fn run_gams<M, P, R>(
    model: &M,
    cfg: &GamsConfig,
    policy: &P,
    observable: Option<&dyn Fn(&M::State) -> f64>,
    rng: &mut R,
) -> Result<RunResult<M::State>>
where
    M: Model,
    P: BranchingPolicy<M::State> + ?Sized,
    R: Rng,
{
    let mut system = initialize_system(model, cfg, rng)?;
    let mut audit = Audit::new(cfg.n_rep);
    audit.record(&system);

    let mut level = compute_level(&system, cfg.k, cfg.level_strategy, rng)?;
    let mut levels = vec![level];
    loop {
        if level.value() > cfg.z_max || cfg.stop_after.is_some_and(|q| system.iteration >= q) {
            break;
        }
        if system.iteration >= cfg.max_iterations {
            return Err(Error::MaxIterations {
                max_iterations: cfg.max_iterations,
                k_history: system.k_history,
            });
        }
        system.current_level = level;
        let plan = split_step(&mut system, level, policy, rng)?;
        resample_step(&mut system, model, &plan, rng)?;
        audit.record(&system);
        level = compute_level(&system, cfg.k, cfg.level_strategy, rng)?;
        levels.push(level);
    }
    system.current_level = level;

    let extinct = level.is_pos_infinite()
        && system.working.iter().all(|r| r.max_level.value() <= cfg.z_max);
    Ok(finish(model, system, levels, extinct, audit, observable))
}

pub(crate) struct Audit {
    n_rep: usize,
    weight_sums: Vec<f64>,
    deviations: Vec<f64>,
    /// `(1/n_rep) prod (n_rep - K)/n_rep` over the first `folded` entries of the K history.
    expected: f64,
    folded: usize,
}

impl Audit {
    pub(crate) fn new(n_rep: usize) -> Self {
        Self {
            n_rep,
            weight_sums: Vec::new(),
            deviations: Vec::new(),
            expected: 1.0 / n_rep as f64,
            folded: 0,
        }
    }

    pub(crate) fn record<S: Clone>(&mut self, system: &ReplicaSystem<S>) {
        let n = self.n_rep as f64;
        for &k in &system.k_history[self.folded..] {
            self.expected *= (self.n_rep - k) as f64 / n;
        }
        self.folded = system.k_history.len();
        let expected = self.expected;
        let dev = system
            .working
            .iter()
            .map(|r| (r.weight - expected).abs())
            .fold(0.0, f64::max);
        self.weight_sums.push(system.total_weight());
        self.deviations.push(dev);
    }
}

pub(crate) fn finish<M: Model>(
    model: &M,
    system: ReplicaSystem<M::State>,
    levels: Vec<ExtendedLevel>,
    extinct: bool,
    audit: Audit,
    observable: Option<&dyn Fn(&M::State) -> f64>,
) -> RunResult<M::State> {
    let final_working: Vec<ReplicaSummary> = system
        .working
        .iter()
        .map(|r| ReplicaSummary {
            label: r.label,
            max_level: r.max_level.value(),
            reached_target: model.reached_target(&r.state),
            root: system.ancestry.as_ref().map(|a| a.root(r.label)),
        })
        .collect();
    let hits = final_working.iter().filter(|r| r.reached_target).count();
    let p_hat = system
        .working
        .iter()
        .zip(&final_working)
        .filter(|(_, s)| s.reached_target)
        .map(|(r, _)| r.weight)
        .sum();
    let p_corr = hits as f64 / system.working.len() as f64;
    let phi_hat = observable.map(|phi| {
        estimate_observable(system.working.iter().chain(system.retired.iter()), phi)
    });
    let working_weight = system.working.first().map_or(0.0, |r| r.weight);
    RunResult {
        p_hat,
        p_corr,
        q_iter: system.iteration,
        k_history: system.k_history,
        levels,
        extinct,
        n_rep: system.n_rep,
        final_working,
        per_iteration_weight_sums: audit.weight_sums,
        working_weight_deviation: audit.deviations,
        working_weight,
        phi_hat,
        working: system.working,
        retired: system.retired,
        retired_count: system.retired_count,
        retired_weight: system.retired_weight,
        ancestry: system.ancestry,
    }
}
