//! Resampling that retires exactly `k` replicas per iteration.
//!
//! The child copies the parent strictly before its entrance time `T_z` and
//! draws the state at `T_z` from the transition kernel conditioned on landing
//! above `z`, by rejection. Every new state above `z` is then a fresh draw, so
//! ties between maximum levels have probability zero for continuous kernels.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gams::Model;
use crate::markov_path::{ChainModel, MarkovChain, StoppedPath};

pub const DEFAULT_ATTEMPT_CAP: usize = 1_000_000;

/// Branches `parent` at level `z` with a conditioned draw at the entrance time.
pub fn exact_k_resample<C: MarkovChain, R: Rng + ?Sized>(
    parent: &StoppedPath<C::Point>,
    z: f64,
    model: &ChainModel<C>,
    attempt_cap: usize,
    rng: &mut R,
) -> Result<StoppedPath<C::Point>> {
    let t = parent
        .entrance_time(z)
        .ok_or_else(|| Error::invalid(format!("parent never exceeds level {z}")))?;
    if t == 0 {
        return Err(Error::invalid(format!(
            "the initial state already exceeds level {z}; there is no transition to condition"
        )));
    }
    let prev = &parent.states()[t - 1];
    for _ in 0..attempt_cap {
        let y = model.chain.step(prev, rng);
        let level = model.chain.xi(&y);
        if level > z {
            let mut states = parent.states()[..t].to_vec();
            let mut levels = parent.levels()[..t].to_vec();
            states.push(y);
            levels.push(level);
            let b_index = parent.b_index().filter(|&b| b < t);
            return model.extend(states, levels, b_index, rng);
        }
    }
    Err(Error::RejectionCapExceeded {
        attempts: attempt_cap,
        level: z,
    })
}

/// A chain model whose resampling kernel is [`exact_k_resample`].
#[derive(Debug, Clone)]
pub struct ExactKModel<C> {
    pub inner: ChainModel<C>,
    pub attempt_cap: usize,
}

impl<C: MarkovChain> ExactKModel<C> {
    pub fn new(inner: ChainModel<C>) -> Self {
        Self {
            inner,
            attempt_cap: DEFAULT_ATTEMPT_CAP,
        }
    }
}

impl<C: MarkovChain> Model for ExactKModel<C> {
    type State = StoppedPath<C::Point>;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::State> {
        self.inner.sample_initial(rng)
    }

    fn max_level(&self, state: &Self::State) -> f64 {
        state.max_level()
    }

    fn resample<R: Rng + ?Sized>(&self, state: &Self::State, level: f64, rng: &mut R) -> Result<Self::State> {
        if state.max_level() <= level {
            return Ok(state.clone());
        }
        exact_k_resample(state, level, &self.inner, self.attempt_cap, rng)
    }

    fn prefix_equal(&self, a: &Self::State, b: &Self::State, level: f64) -> bool {
        match (a.entrance_time(level), b.entrance_time(level)) {
            (Some(ta), Some(tb)) => ta == tb && a.states()[..ta] == b.states()[..tb],
            (None, None) => a == b,
            _ => false,
        }
    }

    fn reached_target(&self, state: &Self::State) -> bool {
        state.reached_b_before_a()
    }
}
