//! Reference values computed independently of the splitting machinery:
//! closed forms, a harmonic linear solve, plain Monte Carlo and an exact
//! dense sampler for the Gaussian bridge.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_path::MarkovChain;
use crate::rng::StreamFactory;
use crate::variants::BridgeState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    ClosedForm,
    LinearSolve,
    DirectMonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    /// Zero for exact oracles.
    pub standard_error: f64,
    pub method: OracleMethod,
    pub samples: u64,
    pub hits: u64,
    /// No hits were observed, so the standard error carries no information.
    pub degenerate: bool,
}

impl OracleResult {
    fn exact(value: f64, method: OracleMethod) -> Self {
        Self {
            value,
            standard_error: 0.0,
            method,
            samples: 0,
            hits: 0,
            degenerate: false,
        }
    }

    /// Binomial estimate from `hits` successes out of `samples`.
    pub fn from_counts(hits: u64, samples: u64) -> Self {
        let n = samples as f64;
        let p = hits as f64 / n;
        Self {
            value: p,
            standard_error: (p * (1.0 - p) / n).sqrt(),
            method: OracleMethod::DirectMonteCarlo,
            samples,
            hits,
            degenerate: hits == 0,
        }
    }

    /// Half-width of the 95% interval, `1.96` standard errors.
    pub fn half_width(&self) -> f64 {
        1.96 * self.standard_error
    }

    pub fn lower(&self) -> f64 {
        self.value - self.half_width()
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width()
    }
}

fn check_ruin_args(p_up: f64, start: u32, top: u32) -> Result<()> {
    if !(p_up > 0.0 && p_up < 1.0) {
        return Err(Error::invalid(format!("p_up must lie in (0, 1), got {p_up}")));
    }
    if !(0 < start && start < top) {
        return Err(Error::invalid(format!("need 0 < start < top, got {start}, {top}")));
    }
    Ok(())
}

/// Probability that the walk started at `start` hits `top` before 0.
pub fn gamblers_ruin_exact(p_up: f64, start: u32, top: u32) -> Result<OracleResult> {
    check_ruin_args(p_up, start, top)?;
    let value = if p_up == 0.5 {
        start as f64 / top as f64
    } else {
        let r = (1.0 - p_up) / p_up;
        (1.0 - r.powi(start as i32)) / (1.0 - r.powi(top as i32))
    };
    Ok(OracleResult::exact(value, OracleMethod::ClosedForm))
}

/// Same probability from an LU solve of `h_i = p h_{i+1} + (1 - p) h_{i-1}`, `h_0 = 0`, `h_top = 1`.
pub fn gamblers_ruin_linear_solve(p_up: f64, start: u32, top: u32) -> Result<OracleResult> {
    check_ruin_args(p_up, start, top)?;
    let n = top as usize - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        if i > 0 {
            m[(i, i - 1)] = -(1.0 - p_up);
        }
        if i + 1 < n {
            m[(i, i + 1)] = -p_up;
        } else {
            rhs[i] = p_up;
        }
    }
    let h = m.lu().solve(&rhs).ok_or(Error::Factorization)?;
    Ok(OracleResult::exact(h[start as usize - 1], OracleMethod::LinearSolve))
}

/// Whether one fresh trajectory of `chain` hits `B` before `A`.
fn direct_trajectory<C: MarkovChain, R: Rng + ?Sized>(chain: &C, path_cap: usize, rng: &mut R) -> Result<bool> {
    let mut x = chain.initial();
    for _ in 0..path_cap {
        if chain.in_b(&x) {
            return Ok(true);
        }
        if chain.in_a(&x) {
            return Ok(false);
        }
        x = chain.step(&x, rng);
    }
    Err(Error::PathCapExceeded { cap: path_cap })
}

/// Fraction of `n` independent trajectories reaching `B` before `A`.
pub fn direct_mc<C: MarkovChain, R: Rng + ?Sized>(
    chain: &C,
    n: u64,
    path_cap: usize,
    rng: &mut R,
) -> Result<OracleResult> {
    if n == 0 {
        return Err(Error::invalid("direct Monte Carlo needs at least one sample"));
    }
    let mut hits = 0;
    for _ in 0..n {
        hits += direct_trajectory(chain, path_cap, rng)? as u64;
    }
    Ok(OracleResult::from_counts(hits, n))
}

/// Number of independent shards used by the parallel samplers.
pub const SHARDS: u64 = 64;

fn shard_sizes(n: u64) -> Vec<u64> {
    (0..SHARDS).map(|s| n / SHARDS + u64::from(s < n % SHARDS)).collect()
}

/// [`direct_mc`] split into fixed shards with their own streams; the result
/// does not depend on the number of threads.
pub fn direct_mc_parallel<C: MarkovChain>(chain: &C, n: u64, path_cap: usize, streams: &StreamFactory) -> Result<OracleResult> {
    if n == 0 {
        return Err(Error::invalid("direct Monte Carlo needs at least one sample"));
    }
    let hits = shard_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(s, size)| {
            let mut rng = streams.stream(s as u64);
            let mut h = 0;
            for _ in 0..size {
                h += direct_trajectory(chain, path_cap, &mut rng)? as u64;
            }
            Ok(h)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(OracleResult::from_counts(hits, n))
}

/// Tridiagonal precision matrix of the discrete bridge: 2 on the diagonal, -1 beside it.
pub fn bridge_precision(kappa: usize) -> DMatrix<f64> {
    DMatrix::from_fn(kappa, kappa, |i, j| {
        if i == j {
            2.0
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Exact covariance of the discrete bridge.
pub fn bridge_covariance(kappa: usize) -> Result<DMatrix<f64>> {
    bridge_precision(kappa).try_inverse().ok_or(Error::Factorization)
}

/// Exact joint sampler `x = L^{-T} g` with `L L^T` the precision matrix.
#[derive(Debug, Clone)]
pub struct DenseBridgeSampler {
    kappa: usize,
    lower: DMatrix<f64>,
}

impl DenseBridgeSampler {
    pub fn new(kappa: usize) -> Result<Self> {
        if kappa < 1 {
            return Err(Error::invalid("kappa must be at least 1"));
        }
        let chol = bridge_precision(kappa).cholesky().ok_or(Error::Factorization)?;
        Ok(Self { kappa, lower: chol.l() })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BridgeState {
        let mut x: Vec<f64> = (0..self.kappa).map(|_| rng.sample(StandardNormal)).collect();
        // Back substitution with L^T.
        for i in (0..self.kappa).rev() {
            let mut s = x[i];
            for j in i + 1..self.kappa {
                s -= self.lower[(j, i)] * x[j];
            }
            x[i] = s / self.lower[(i, i)];
        }
        BridgeState { values: x }
    }

    /// Monte Carlo estimate of `P(max_i x_i > z)` over fixed shards.
    pub fn exceedance_probability(&self, z: f64, n: u64, streams: &StreamFactory) -> Result<OracleResult> {
        if n == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        let hits: u64 = shard_sizes(n)
            .into_par_iter()
            .enumerate()
            .map(|(s, size)| {
                let mut rng = streams.stream(s as u64);
                (0..size).filter(|_| self.sample(&mut rng).max_level() > z).count() as u64
            })
            .collect::<Vec<u64>>()
            .into_iter()
            .sum();
        Ok(OracleResult::from_counts(hits, n))
    }
}
