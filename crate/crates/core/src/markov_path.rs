//! Stopped Markov-chain paths as splitting models.
//!
//! A path starts at the chain's initial point and is stopped on its first
//! entrance into `A` (and, by default, into `B`). Its level is the maximum of
//! the reaction coordinate along the path. Branching at level `z` copies the
//! parent up to and including its first entrance time into `{xi > z}` and then
//! continues with fresh transitions.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gams::Model;

/// A time-homogeneous Markov chain with a reaction coordinate.
pub trait MarkovChain: Sync {
    type Point: Clone + PartialEq + AsRef<[f64]> + Send + Sync;

    fn initial(&self) -> Self::Point;

    fn step<R: Rng + ?Sized>(&self, x: &Self::Point, rng: &mut R) -> Self::Point;

    fn in_a(&self, x: &Self::Point) -> bool;

    fn in_b(&self, x: &Self::Point) -> bool;

    fn xi(&self, x: &Self::Point) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    InA,
    InB,
}

/// A path stopped on entering `A` (or `B`), with cached reaction coordinate values.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedPath<P> {
    states: Vec<P>,
    levels: Vec<f64>,
    termination: Termination,
    b_index: Option<usize>,
    max_level: f64,
}

impl<P> StoppedPath<P> {
    pub fn states(&self) -> &[P] {
        &self.states
    }

    /// Reaction coordinate at each time index.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn stopped_in_a(&self) -> bool {
        self.termination == Termination::InA
    }

    pub fn max_level(&self) -> f64 {
        self.max_level
    }

    /// First time index in `B`, if any.
    pub fn b_index(&self) -> Option<usize> {
        self.b_index
    }

    /// Whether the path visits `B` before being stopped in `A`.
    pub fn reached_b_before_a(&self) -> bool {
        self.b_index.is_some()
    }

    /// First time index with `xi > z`.
    pub fn entrance_time(&self, z: f64) -> Option<usize> {
        entrance_time(&self.levels, z)
    }

    /// First time index with `xi >= z`.
    pub fn entrance_time_non_strict(&self, z: f64) -> Option<usize> {
        self.levels.iter().position(|&l| l >= z)
    }
}

/// First index with `levels[i] > z`.
pub fn entrance_time(levels: &[f64], z: f64) -> Option<usize> {
    levels.iter().position(|&l| l > z)
}

/// A chain turned into a splitting model.
#[derive(Debug, Clone)]
pub struct ChainModel<C> {
    pub chain: C,
    pub z_max: f64,
    /// Maximum number of states in one path.
    pub path_cap: usize,
    /// Stop paths on entering `B` as well as `A`.
    pub stop_at_b: bool,
}

impl<C: MarkovChain> ChainModel<C> {
    pub const DEFAULT_PATH_CAP: usize = 100_000;

    pub fn new(chain: C, z_max: f64) -> Self {
        Self {
            chain,
            z_max,
            path_cap: Self::DEFAULT_PATH_CAP,
            stop_at_b: true,
        }
    }

    pub fn with_path_cap(mut self, cap: usize) -> Self {
        self.path_cap = cap;
        self
    }

    pub fn with_stop_at_b(mut self, stop: bool) -> Self {
        self.stop_at_b = stop;
        self
    }

    /// Simulates from `from` until the path is stopped.
    pub fn simulate_path<R: Rng + ?Sized>(&self, from: C::Point, rng: &mut R) -> Result<StoppedPath<C::Point>> {
        let level = self.chain.xi(&from);
        self.extend(vec![from], vec![level], None, rng)
    }

    /// Continues a prefix (not yet stopped, except possibly at its last state) until stopped.
    pub(crate) fn extend<R: Rng + ?Sized>(
        &self,
        mut states: Vec<C::Point>,
        mut levels: Vec<f64>,
        mut b_index: Option<usize>,
        rng: &mut R,
    ) -> Result<StoppedPath<C::Point>> {
        let termination = loop {
            let i = states.len() - 1;
            let x = &states[i];
            if b_index.is_none() && self.chain.in_b(x) {
                if levels[i] <= self.z_max {
                    return Err(Error::ModelAssumption(format!(
                        "state in B has reaction coordinate {} <= z_max = {}",
                        levels[i], self.z_max
                    )));
                }
                b_index = Some(i);
            }
            if self.chain.in_a(x) {
                break Termination::InA;
            }
            if self.stop_at_b && b_index.is_some() {
                break Termination::InB;
            }
            if states.len() >= self.path_cap {
                return Err(Error::PathCapExceeded { cap: self.path_cap });
            }
            let y = self.chain.step(x, rng);
            levels.push(self.chain.xi(&y));
            states.push(y);
        };
        let max_level = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(StoppedPath {
            states,
            levels,
            termination,
            b_index,
            max_level,
        })
    }

    /// Copies `parent` up to and including index `t` and continues from there.
    pub fn continue_from<R: Rng + ?Sized>(
        &self,
        parent: &StoppedPath<C::Point>,
        t: usize,
        rng: &mut R,
    ) -> Result<StoppedPath<C::Point>> {
        let states = parent.states[..=t].to_vec();
        let levels = parent.levels[..=t].to_vec();
        let b_index = parent.b_index.filter(|&b| b <= t);
        self.extend(states, levels, b_index, rng)
    }

    /// Resampling kernel: branch at the first entrance time into `{xi > z}`.
    pub fn branch_resample<R: Rng + ?Sized>(
        &self,
        parent: &StoppedPath<C::Point>,
        z: f64,
        rng: &mut R,
    ) -> Result<StoppedPath<C::Point>> {
        match parent.entrance_time(z) {
            None => Ok(parent.clone()),
            Some(t) => self.continue_from(parent, t, rng),
        }
    }
}

impl<C: MarkovChain> Model for ChainModel<C> {
    type State = StoppedPath<C::Point>;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::State> {
        self.simulate_path(self.chain.initial(), rng)
    }

    fn max_level(&self, state: &Self::State) -> f64 {
        state.max_level
    }

    fn resample<R: Rng + ?Sized>(&self, state: &Self::State, level: f64, rng: &mut R) -> Result<Self::State> {
        self.branch_resample(state, level, rng)
    }

    fn prefix_equal(&self, a: &Self::State, b: &Self::State, level: f64) -> bool {
        match (a.entrance_time(level), b.entrance_time(level)) {
            (Some(ta), Some(tb)) => ta == tb && a.states[..=ta] == b.states[..=tb],
            (None, None) => a == b,
            _ => false,
        }
    }

    fn reached_target(&self, state: &Self::State) -> bool {
        state.reached_b_before_a()
    }
}

/// Writes one line per time index: the time, the coordinates and the reaction coordinate.
pub fn write_path<P: AsRef<[f64]>, W: Write>(path: &StoppedPath<P>, dt: f64, mut out: W) -> Result<()> {
    let dim = path.states.first().map_or(0, |p| p.as_ref().len());
    write!(out, "# time")?;
    for d in 0..dim {
        write!(out, " x{d}")?;
    }
    writeln!(out, " xi")?;
    for (i, (x, l)) in path.states.iter().zip(&path.levels).enumerate() {
        write!(out, "{}", i as f64 * dt)?;
        for c in x.as_ref() {
            write!(out, " {c}")?;
        }
        writeln!(out, " {l}")?;
    }
    Ok(())
}
