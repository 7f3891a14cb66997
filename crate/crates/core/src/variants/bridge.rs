//! A discrete Brownian bridge as a static splitting model.
//!
//! The state is `(x_1, ..., x_kappa)` with density proportional to
//! `exp(-(x_1^2 + (x_2 - x_1)^2 + ... + x_kappa^2) / 2)`, i.e. a Gaussian walk
//! with unit-variance increments pinned at 0 on both ends. Resampling at level
//! `z` keeps `x_1..=x_T` with `T` the first index above `z` and redraws the
//! rest as a bridge from `x_T` to 0.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gams::Model;
use crate::markov_path::entrance_time;

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeState {
    pub values: Vec<f64>,
}

impl BridgeState {
    pub fn kappa(&self) -> usize {
        self.values.len()
    }

    pub fn max_level(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Appends `m` interior points of a bridge from `start` to `end` with unit-variance increments.
///
/// With `d` increments left from the current value `a`, the next point is
/// `N(a + (end - a) / d, (d - 1) / d)`.
pub fn extend_bridge<R: Rng + ?Sized>(out: &mut Vec<f64>, start: f64, end: f64, m: usize, rng: &mut R) {
    let mut a = start;
    for i in 0..m {
        let d = (m + 1 - i) as f64;
        let g: f64 = rng.sample(StandardNormal);
        a = a + (end - a) / d + ((d - 1.0) / d).sqrt() * g;
        out.push(a);
    }
}

/// `m` interior points of a bridge from `start` to `end`.
pub fn sample_bridge<R: Rng + ?Sized>(start: f64, end: f64, m: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(m);
    extend_bridge(&mut out, start, end, m, rng);
    out
}

/// The bridge model with the rare event `max_i x_i > z_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeModel {
    pub kappa: usize,
    pub z_max: f64,
}

impl BridgeModel {
    pub fn new(kappa: usize, z_max: f64) -> Result<Self> {
        if kappa < 1 {
            return Err(Error::config("kappa must be at least 1"));
        }
        if !z_max.is_finite() {
            return Err(Error::config(format!("z_max must be finite, got {z_max}")));
        }
        Ok(Self { kappa, z_max })
    }
}

impl Model for BridgeModel {
    type State = BridgeState;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BridgeState> {
        Ok(BridgeState {
            values: sample_bridge(0.0, 0.0, self.kappa, rng),
        })
    }

    fn max_level(&self, state: &BridgeState) -> f64 {
        state.max_level()
    }

    fn resample<R: Rng + ?Sized>(&self, state: &BridgeState, level: f64, rng: &mut R) -> Result<BridgeState> {
        let Some(t) = entrance_time(&state.values, level) else {
            return Ok(state.clone());
        };
        let mut values = state.values[..=t].to_vec();
        extend_bridge(&mut values, state.values[t], 0.0, self.kappa - 1 - t, rng);
        Ok(BridgeState { values })
    }

    fn prefix_equal(&self, a: &BridgeState, b: &BridgeState, level: f64) -> bool {
        match (entrance_time(&a.values, level), entrance_time(&b.values, level)) {
            (Some(ta), Some(tb)) => ta == tb && a.values[..=ta] == b.values[..=tb],
            (None, None) => a == b,
            _ => false,
        }
    }

    fn reached_target(&self, state: &BridgeState) -> bool {
        state.max_level() > self.z_max
    }
}
