//! Statistics across independent runs: means and confidence intervals,
//! partial extreme averages, transition-channel analysis and ancestry.

use serde::{Deserialize, Serialize};

use crate::dynamics::ChannelSpec;
use crate::error::{Error, Result};
use crate::gams::RunResult;
use crate::markov_path::StoppedPath;

/// 97.5% quantile of the standard normal law.
pub const Z_975: f64 = 1.96;

/// Empirical mean and 95% confidence interval width over `n_runs` values.
///
/// `ci_width = 2 * 1.96 / sqrt(N) * sqrt(mean(x^2) - mean(x)^2)`, i.e. the
/// full width of the interval, using the `1/N` second moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_runs: usize,
    pub mean: f64,
    pub ci_width: f64,
    pub min: f64,
    pub max: f64,
}

impl Aggregate {
    pub fn lower(&self) -> f64 {
        self.mean - self.ci_width / 2.0
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_width / 2.0
    }

    /// Standard error of the mean implied by the interval width.
    pub fn standard_error(&self) -> f64 {
        self.ci_width / (2.0 * Z_975)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }

    pub fn overlaps(&self, other: &Aggregate) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    /// `|mean - x| / standard_error`.
    pub fn z_score(&self, x: f64) -> f64 {
        (self.mean - x).abs() / self.standard_error()
    }
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid(format!("aggregate needs at least 2 values, got {n}")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let second = values.iter().map(|v| v * v).sum::<f64>() / nf;
    let var = (second - mean * mean).max(0.0);
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(Aggregate {
        n_runs: n,
        mean: mean.clamp(min, max),
        ci_width: 2.0 * Z_975 / nf.sqrt() * var.sqrt(),
        min,
        max,
    })
}

/// Two-sample z-score between two independent means.
pub fn z_score_between(a: &Aggregate, b_mean: f64, b_standard_error: f64) -> f64 {
    (a.mean - b_mean).abs() / (a.standard_error().powi(2) + b_standard_error.powi(2)).sqrt()
}

/// Means over the `n0` largest values and over the remaining ones.
pub fn partial_averages(values: &[f64], n0: usize) -> Result<(f64, f64)> {
    let n = values.len();
    if n0 == 0 || n0 >= n {
        return Err(Error::invalid(format!("need 0 < n0 < N, got n0 = {n0}, N = {n}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let large = sorted[..n0].iter().sum::<f64>() / n0 as f64;
    let small = sorted[n0..].iter().sum::<f64>() / (n - n0) as f64;
    Ok((large, small))
}

/// Checkpoints `2 <= n <= total` spaced logarithmically, always ending at `total`.
pub fn log_checkpoints(total: usize, per_decade: usize) -> Vec<usize> {
    let mut out = Vec::new();
    if total < 2 {
        return out;
    }
    let per_decade = per_decade.max(1) as f64;
    let mut i = 0.0;
    loop {
        let n = 10f64.powf(i / per_decade).round() as usize;
        if n >= total {
            break;
        }
        if n >= 2 && out.last() != Some(&n) {
            out.push(n);
        }
        i += 1.0;
    }
    out.push(total);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: usize,
    pub mean: f64,
    pub ci_width: f64,
}

/// Running mean and interval width of the first `n` values at each checkpoint.
pub fn convergence_trace(values: &[f64], checkpoints: &[usize]) -> Vec<TracePoint> {
    let (mut sum, mut sum2, mut done) = (0.0, 0.0, 0);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        if n > values.len() || n < 2 {
            continue;
        }
        for v in &values[done..n] {
            sum += v;
            sum2 += v * v;
        }
        done = n;
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum2 / nf - mean * mean).max(0.0);
        out.push(TracePoint {
            n,
            mean,
            ci_width: 2.0 * Z_975 / nf.sqrt() * var.sqrt(),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Upper,
    Lower,
    NotCrossed,
}

/// Classifies a 2-D path by its ordinate at the first index where the abscissa crosses.
pub fn classify_channel<P: AsRef<[f64]>>(states: &[P], spec: &ChannelSpec) -> Channel {
    match states.iter().map(|p| p.as_ref()).find(|p| p[0] > spec.crossing_abscissa) {
        None => Channel::NotCrossed,
        Some(p) if p[1] > spec.upper_threshold => Channel::Upper,
        Some(_) => Channel::Lower,
    }
}

/// Per-run channel counts and estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub p_hat: f64,
    pub p_upper: f64,
    pub p_lower: f64,
    pub m_b: usize,
    pub m_b_upper: usize,
    pub m_b_lower: usize,
}

/// Splits the final working replicas that reached `B` by channel.
pub fn channel_record<P: AsRef<[f64]>>(run: &RunResult<StoppedPath<P>>, spec: &ChannelSpec) -> ChannelRecord {
    let mut rec = ChannelRecord {
        p_hat: run.p_hat,
        p_upper: 0.0,
        p_lower: 0.0,
        m_b: 0,
        m_b_upper: 0,
        m_b_lower: 0,
    };
    for r in run.working.iter().filter(|r| r.state.reached_b_before_a()) {
        rec.m_b += 1;
        match classify_channel(r.state.states(), spec) {
            Channel::Upper => {
                rec.m_b_upper += 1;
                rec.p_upper += r.weight;
            }
            _ => {
                rec.m_b_lower += 1;
                rec.p_lower += r.weight;
            }
        }
    }
    rec
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub n_runs: usize,
    /// Fraction of runs with a nonzero estimate.
    pub r_n: f64,
    pub rho_upper: f64,
    pub rho_lower: f64,
    pub rho_mix: f64,
    /// Mean estimate over runs whose `B`-reaching replicas all used the upper channel.
    pub p_tilde_upper: f64,
    pub p_tilde_lower: f64,
    pub p_tilde_mix: f64,
    pub p_bar: f64,
    /// Mean of the per-run upper-channel estimator.
    pub p_upper_mean: f64,
    pub p_lower_mean: f64,
}

impl ChannelStats {
    /// `R_N (rho_up p_up + rho_low p_low + rho_mix p_mix)`.
    pub fn recombined(&self) -> f64 {
        self.r_n
            * (self.rho_upper * self.p_tilde_upper
                + self.rho_lower * self.p_tilde_lower
                + self.rho_mix * self.p_tilde_mix)
    }
}

pub fn channel_stats(records: &[ChannelRecord]) -> Result<ChannelStats> {
    let n = records.len();
    if n == 0 {
        return Err(Error::invalid("channel statistics need at least one run"));
    }
    let (mut up, mut low, mut mix) = ((0usize, 0.0), (0usize, 0.0), (0usize, 0.0));
    for r in records.iter().filter(|r| r.p_hat != 0.0) {
        let bucket = if r.m_b_lower == 0 {
            &mut up
        } else if r.m_b_upper == 0 {
            &mut low
        } else {
            &mut mix
        };
        bucket.0 += 1;
        bucket.1 += r.p_hat;
    }
    let nonzero = up.0 + low.0 + mix.0;
    let frac = |c: usize| if nonzero == 0 { 0.0 } else { c as f64 / nonzero as f64 };
    let cond = |(c, s): (usize, f64)| if c == 0 { 0.0 } else { s / c as f64 };
    let nf = n as f64;
    Ok(ChannelStats {
        n_runs: n,
        r_n: nonzero as f64 / nf,
        rho_upper: frac(up.0),
        rho_lower: frac(low.0),
        rho_mix: frac(mix.0),
        p_tilde_upper: cond(up),
        p_tilde_lower: cond(low),
        p_tilde_mix: cond(mix),
        p_bar: records.iter().map(|r| r.p_hat).sum::<f64>() / nf,
        p_upper_mean: records.iter().map(|r| r.p_upper).sum::<f64>() / nf,
        p_lower_mean: records.iter().map(|r| r.p_lower).sum::<f64>() / nf,
    })
}

/// Number of distinct initial ancestors among the final working replicas.
pub fn ancestry_report<S>(run: &RunResult<S>) -> Result<usize> {
    let ancestry = run.ancestry.as_ref().ok_or(Error::AncestryNotRecorded)?;
    let mut roots: Vec<u64> = run.working.iter().map(|r| ancestry.root(r.label)).collect();
    roots.sort_unstable();
    roots.dedup();
    Ok(roots.len())
}
