//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs every criterion by default. Pass criterion numbers to select some:
//! `cargo test -p ams-core --test acceptance -- 2 8`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use ams_core::diagnostics::{aggregate, channel_record, channel_stats, partial_averages, Aggregate, ChannelRecord};
use ams_core::dynamics::{
    bichannel_model, drifted_bm_model, gamblers_ruin_model, AllenCahn, BiChannel, LinearPotential, Potential,
    XiChoice, DT_1D, RHO,
};
use ams_core::experiment::{mc_baseline, run_experiment, sweep, ExperimentConfig};
use ams_core::markov_path::StoppedPath;
use ams_core::oracle::{
    bridge_covariance, direct_mc_parallel, gamblers_ruin_exact, gamblers_ruin_linear_solve, DenseBridgeSampler,
    OracleResult,
};
use ams_core::rng::{fnv1a, SimRng, StreamFactory};
use ams_core::variants::biased::{run_biased, BiasedVariantKind};
use ams_core::variants::bridge::sample_bridge;
use ams_core::variants::{BridgeModel, ExactKModel};
use ams_core::{run_ams, GamsConfig, Result};
use rand::Rng;
use rayon::prelude::*;

const SEED: u64 = 20_160_627;

/// Reference means of the drifted Brownian motion runs.
const P_BETA8: f64 = 3.597e-4;
const P_BETA24: f64 = 1.205e-10;
/// Version 2 at beta = 8 must fall below this, with its interval excluding `V2_EXCLUDED`.
const V2_CEILING: f64 = 3.45e-4;
const V2_EXCLUDED: f64 = 3.60e-4;
/// Version 1 must underestimate by more than this factor.
const V1_FACTOR: f64 = 5.0;
const MAX_Z: f64 = 4.0;
const MASS_TOL: f64 = 1e-12;
const MOMENT_SE: f64 = 3.0;
const GRADIENT_REL_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-12;
const RECOMBINATION_TOL: f64 = 1e-15;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn streams(tag: &str) -> StreamFactory {
    StreamFactory::with_salt(SEED, fnv1a(tag.as_bytes()))
}

/// `n` independent runs on their own streams, in run order.
fn replicate<T: Send>(n: usize, tag: &str, f: impl Fn(&mut SimRng) -> Result<T> + Sync) -> Result<Vec<T>> {
    let s = streams(tag);
    (1..=n as u64).into_par_iter().map(|run| f(&mut s.stream(run))).collect()
}

fn engine(n_rep: usize, k: usize, z_max: f64) -> GamsConfig {
    let mut cfg = GamsConfig::new(n_rep, k, z_max);
    cfg.record_ancestry = false;
    cfg
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    fn overlaps(&self, other: &Interval) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

impl From<&Aggregate> for Interval {
    fn from(a: &Aggregate) -> Self {
        Self { lower: a.lower(), upper: a.upper() }
    }
}

impl From<&OracleResult> for Interval {
    fn from(r: &OracleResult) -> Self {
        Self { lower: r.lower(), upper: r.upper() }
    }
}

fn all_overlap(intervals: &[Interval]) -> bool {
    intervals.iter().enumerate().all(|(i, a)| intervals[i + 1..].iter().all(|b| a.overlaps(b)))
}

fn show(a: &Aggregate) -> String {
    format!("{:.4e} [{:.4e}, {:.4e}]", a.mean, a.lower(), a.upper())
}

fn show_mc(r: &OracleResult) -> String {
    format!("{:.4e} [{:.4e}, {:.4e}] ({} hits)", r.value, r.lower(), r.upper(), r.hits)
}

fn criterion_1() -> Result<Outcome> {
    let (p_up, start, top) = (0.4, 1, 9);
    let model = gamblers_ruin_model(p_up, start, top)?;
    let exact = gamblers_ruin_exact(p_up, start, top)?.value;
    let solve = gamblers_ruin_linear_solve(p_up, start, top)?.value;
    let cfg = engine(50, 1, model.z_max);
    let p = replicate(50_000, "criterion-1", |rng| Ok(run_ams(&model, &cfg, None, rng)?.p_hat))?;
    let a = aggregate(&p)?;
    let z = a.z_score(exact);
    let pass = (a.mean - exact).abs() <= a.ci_width / 2.0 && z.abs() <= MAX_Z && (exact - solve).abs() < 1e-12;
    Ok(Outcome::new(
        pass,
        format!("exact {exact:.6e} (linear solve {solve:.6e}), AMS {} z = {z:.2}", show(&a)),
    ))
}

fn criterion_2() -> Result<(Outcome, Aggregate)> {
    let model = drifted_bm_model(1.0, 8.0, DT_1D, 0.1, 1.9)?;
    let cfg = engine(100, 1, model.z_max);
    let p = replicate(100_000, "criterion-2", |rng| Ok(run_ams(&model, &cfg, None, rng)?.p_hat))?;
    let a = aggregate(&p)?;
    let mc = direct_mc_parallel(&model.chain, 10_000_000, model.path_cap, &streams("criterion-2-mc"))?;
    let pass = a.contains(P_BETA8) && Interval::from(&a).overlaps(&Interval::from(&mc));
    let detail = format!("AMS {} vs {P_BETA8:.4e}; direct MC {}", show(&a), show_mc(&mc));
    Ok((Outcome::new(pass, detail), a))
}

fn criterion_3() -> Result<Outcome> {
    let model = drifted_bm_model(1.0, 24.0, DT_1D, 0.1, 1.9)?;
    let mut runs = Vec::new();
    // (10, 10) is not a valid pair since k < n_rep.
    for (n_rep, k) in [(100, 1), (10, 1), (100, 10)] {
        let cfg = engine(n_rep, k, model.z_max);
        let tag = format!("criterion-3-{n_rep}-{k}");
        let p = replicate(20_000, &tag, |rng| Ok(run_ams(&model, &cfg, None, rng)?.p_hat))?;
        runs.push(((n_rep, k), aggregate(&p)?));
    }
    let main = &runs[0].1;
    let intervals: Vec<Interval> = runs.iter().map(|(_, a)| a.into()).collect();
    let pass = main.contains(P_BETA24) && all_overlap(&intervals);
    let detail = runs
        .iter()
        .map(|((n, k), a)| format!("({n},{k}) {} rel half-width {:.1}%", show(a), 50.0 * a.ci_width / a.mean))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome::new(pass, format!("{detail}; reference {P_BETA24:.4e}")))
}

fn criterion_4() -> Result<Outcome> {
    let model24 = drifted_bm_model(1.0, 24.0, DT_1D, 0.1, 1.9)?;
    let cfg = engine(100, 1, model24.z_max);
    let v1 = replicate(20_000, "criterion-4-v1", |rng| {
        Ok(run_biased(&model24, &cfg, BiasedVariantKind::Version1, rng)?.result.p_hat)
    })?;
    let v1 = aggregate(&v1)?;
    let model8 = drifted_bm_model(1.0, 8.0, DT_1D, 0.1, 1.9)?;
    let v2 = replicate(100_000, "criterion-4-v2", |rng| {
        Ok(run_biased(&model8, &cfg, BiasedVariantKind::Version2, rng)?.result.p_hat)
    })?;
    let v2 = aggregate(&v2)?;
    let v1_pass = v1.mean < P_BETA24 / V1_FACTOR;
    let v2_pass = v2.mean < V2_CEILING && !v2.contains(V2_EXCLUDED);
    Ok(Outcome::new(
        v1_pass && v2_pass,
        format!(
            "version 1 beta=24 {} (limit {:.3e}); version 2 beta=8 {} (limit {V2_CEILING:.3e}, excludes {V2_EXCLUDED:.3e}: {})",
            show(&v1),
            P_BETA24 / V1_FACTOR,
            show(&v2),
            !v2.contains(V2_EXCLUDED)
        ),
    ))
}

fn criterion_5() -> Result<Outcome> {
    fn worst(pairs: Vec<(f64, f64)>) -> (f64, f64) {
        pairs.into_iter().fold((0.0, 0.0), |(m, d), (a, b)| (f64::max(m, a), f64::max(d, b)))
    }
    fn audit<S>(r: &ams_core::RunResult<S>) -> (f64, f64) {
        let mass = r.per_iteration_weight_sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        let dev = r.working_weight_deviation.iter().copied().fold(0.0, f64::max);
        (mass, dev)
    }
    let ruin = gamblers_ruin_model(0.4, 1, 9)?;
    let cfg = engine(50, 1, ruin.z_max);
    let (m1, d1) = worst(replicate(1000, "criterion-5-ruin", |rng| Ok(audit(&run_ams(&ruin, &cfg, None, rng)?)))?);
    let bm = drifted_bm_model(1.0, 8.0, DT_1D, 0.1, 1.9)?;
    let cfg = engine(100, 10, bm.z_max);
    let (m2, d2) = worst(replicate(1000, "criterion-5-bm", |rng| Ok(audit(&run_ams(&bm, &cfg, None, rng)?)))?);
    let (mass, dev) = (m1.max(m2), d1.max(d2));
    Ok(Outcome::new(
        mass <= MASS_TOL && dev <= MASS_TOL,
        format!("2 x 1000 runs: max |sum w - 1| = {mass:.2e}, max weight-formula gap = {dev:.2e}"),
    ))
}

fn criterion_6() -> Result<Outcome> {
    let model = gamblers_ruin_model(0.4, 1, 9)?;
    let mut cfg = engine(50, 1, model.z_max);
    cfg.stop_after = Some(3);
    cfg.retain_retired = true;
    let phi = |path: &StoppedPath<[f64; 1]>| if path.max_level() > 5.0 { 1.0 } else { 0.0 };
    let estimates = replicate(50_000, "criterion-6", |rng| {
        let r = run_ams(&model, &cfg, Some(&phi), rng)?;
        Ok(r.phi_hat.expect("observable was requested"))
    })?;
    let a = aggregate(&estimates)?;
    // Reaching 6 before 0 is exactly the event max level > 5.
    let reach6 = gamblers_ruin_model(0.4, 1, 6)?;
    let mc = direct_mc_parallel(&reach6.chain, 1_000_000, reach6.path_cap, &streams("criterion-6-mc"))?;
    let exact = gamblers_ruin_exact(0.4, 1, 6)?.value;
    let z = (a.mean - mc.value) / (a.standard_error().powi(2) + mc.standard_error.powi(2)).sqrt();
    Ok(Outcome::new(
        z.abs() <= MAX_Z,
        format!("q0 = 3 estimator {} vs direct MC {} z = {z:.2}; exact {exact:.5e}", show(&a), show_mc(&mc)),
    ))
}

/// Per-coordinate mean and variance with their standard errors.
struct Moments {
    mean: Vec<(f64, f64)>,
    var: Vec<(f64, f64)>,
}

fn moments(samples: &[Vec<f64>]) -> Moments {
    let n = samples.len() as f64;
    let d = samples[0].len();
    let mut mean = Vec::new();
    let mut var = Vec::new();
    for i in 0..d {
        let m = samples.iter().map(|s| s[i]).sum::<f64>() / n;
        let c2 = samples.iter().map(|s| (s[i] - m).powi(2)).sum::<f64>() / n;
        let c4 = samples.iter().map(|s| (s[i] - m).powi(4)).sum::<f64>() / n;
        mean.push((m, (c2 / n).sqrt()));
        var.push((c2, ((c4 - c2 * c2) / n).sqrt()));
    }
    Moments { mean, var }
}

fn max_z(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter()
        .zip(b)
        .map(|((x, sx), (y, sy))| (x - y).abs() / (sx * sx + sy * sy).sqrt())
        .fold(0.0, f64::max)
}

fn criterion_7() -> Result<Outcome> {
    let (kappa, z_max) = (7, 2.0);
    let model = BridgeModel::new(kappa, z_max)?;
    let cfg = engine(100, 1, z_max);
    let p = replicate(10_000, "criterion-7", |rng| Ok(run_ams(&model, &cfg, None, rng)?.p_hat))?;
    let a = aggregate(&p)?;
    let dense = DenseBridgeSampler::new(kappa)?;
    let mc = dense.exceedance_probability(z_max, 10_000_000, &streams("criterion-7-dense"))?;
    let overlap = Interval::from(&a).overlaps(&Interval::from(&mc));

    let n = 1_000_000;
    let mut rng = streams("criterion-7-moments").stream(1);
    let seq: Vec<Vec<f64>> = (0..n).map(|_| sample_bridge(0.0, 0.0, kappa, &mut rng)).collect();
    let mut rng = streams("criterion-7-moments").stream(2);
    let den: Vec<Vec<f64>> = (0..n).map(|_| dense.sample(&mut rng).values).collect();
    let (ms, md) = (moments(&seq), moments(&den));
    let z_mean = max_z(&ms.mean, &md.mean);
    let z_var = max_z(&ms.var, &md.var);
    let cov = bridge_covariance(kappa)?;
    let exact_var: Vec<(f64, f64)> = (0..kappa).map(|i| (cov[(i, i)], 0.0)).collect();
    let z_exact = max_z(&ms.var, &exact_var);
    Ok(Outcome::new(
        overlap && z_mean <= MOMENT_SE && z_var <= MOMENT_SE,
        format!(
            "AMS {} vs dense MC {}; sequential vs dense max |z| mean {z_mean:.2}, variance {z_var:.2} \
             (sequential vs exact variance {z_exact:.2})",
            show(&a),
            show_mc(&mc)
        ),
    ))
}

const EXACT_K_ATTEMPT_CAP: usize = 1_000_000_000;

fn criterion_8(reference: &Aggregate) -> Result<Outcome> {
    let mut model = ExactKModel::new(drifted_bm_model(1.0, 8.0, DT_1D, 0.1, 1.9)?);
    // The Gaussian step has unbounded support, so a parent whose entrance
    // step was a several-sigma jump can need far more than the default draws.
    model.attempt_cap = EXACT_K_ATTEMPT_CAP;
    let x0_level = 1.0;
    let k = 1;
    let cfg = engine(100, k, model.inner.z_max);
    struct Tally {
        p_hat: f64,
        iterations: usize,
        tied: usize,
        tied_at_start: usize,
        extinct: bool,
    }
    let tallies = replicate(1000, "criterion-8", |rng| {
        let r = run_ams(&model, &cfg, None, rng)?;
        let tied: Vec<usize> = (0..r.q_iter).filter(|&j| r.k_history[j] > k).collect();
        Ok(Tally {
            p_hat: r.p_hat,
            iterations: r.q_iter,
            tied_at_start: tied.iter().filter(|&&j| r.levels[j].value() == x0_level).count(),
            tied: tied.len(),
            extinct: r.extinct,
        })
    })?;
    let sum = |f: fn(&Tally) -> usize| tallies.iter().map(f).sum::<usize>();
    let (iterations, tied, at_start) = (sum(|t| t.iterations), sum(|t| t.tied), sum(|t| t.tied_at_start));
    let extinct = tallies.iter().filter(|t| t.extinct).count();
    let a = aggregate(&tallies.iter().map(|t| t.p_hat).collect::<Vec<_>>())?;
    let overlap = Interval::from(&a).overlaps(&Interval::from(reference));
    Ok(Outcome::new(
        tied == 0 && extinct == 0 && overlap,
        format!(
            "K > k at {tied} of {iterations} iterations ({at_start} at the starting level xi(x0) = {x0_level}, \
             {} elsewhere); {extinct} extinctions; estimate {} overlaps criterion 2: {overlap}",
            tied - at_start,
            show(&a)
        ),
    ))
}

/// Five-point central differences.
fn fd_gradient<P: Potential<D>, const D: usize>(p: &P, x: &[f64; D]) -> [f64; D] {
    let h = 1e-3;
    std::array::from_fn(|i| {
        let at = |s: f64| {
            let mut y = *x;
            y[i] += s;
            p.value(&y)
        };
        (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
    })
}

fn relative_gradient_error<P: Potential<D>, const D: usize>(p: &P, x: &[f64; D]) -> f64 {
    let g = p.gradient(x);
    let fd = fd_gradient(p, x);
    let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    err / g.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn criterion_9() -> Result<Outcome> {
    let mut rng = streams("criterion-9").stream(1);
    let linear = LinearPotential { mu: 1.0 };
    let allen_cahn = AllenCahn { gamma: 1.0 };
    let (mut grad, mut sym) = ([0.0f64; 3], 0.0f64);
    for _ in 0..100 {
        let x = [rng.random_range(-3.0..3.0)];
        let p = [rng.random_range(-2.0..2.0), rng.random_range(-1.5..2.5)];
        let q = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        grad[0] = grad[0].max(relative_gradient_error(&linear, &x));
        grad[1] = grad[1].max(relative_gradient_error(&BiChannel, &p));
        grad[2] = grad[2].max(relative_gradient_error(&allen_cahn, &q));

        let mirrored = [-p[0], p[1]];
        let (g, gm) = (BiChannel.gradient(&p), BiChannel.gradient(&mirrored));
        sym = sym
            .max((BiChannel.value(&p) - BiChannel.value(&mirrored)).abs())
            .max((g[0] + gm[0]).abs())
            .max((g[1] - gm[1]).abs());
        let (swapped, negated) = ([q[1], q[0]], [-q[0], -q[1]]);
        let (g, gs, gn) = (allen_cahn.gradient(&q), allen_cahn.gradient(&swapped), allen_cahn.gradient(&negated));
        sym = sym
            .max((allen_cahn.value(&q) - allen_cahn.value(&swapped)).abs())
            .max((allen_cahn.value(&q) - allen_cahn.value(&negated)).abs())
            .max((g[0] - gs[1]).abs().max((g[1] - gs[0]).abs()))
            .max((g[0] + gn[0]).abs().max((g[1] + gn[1]).abs()));
        sym = sym.max((linear.value(&x) + linear.value(&[-x[0]])).abs());
    }
    let worst = grad.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::new(
        worst <= GRADIENT_REL_TOL && sym <= SYMMETRY_TOL,
        format!(
            "max relative gradient error linear {:.1e}, bi-channel {:.1e}, allen-cahn {:.1e}; max symmetry gap {sym:.1e}",
            grad[0], grad[1], grad[2]
        ),
    ))
}

fn criterion_10() -> Result<Outcome> {
    let beta = 5.0;
    let n_runs = 10_000;
    let mut intervals = Vec::new();
    let mut parts = Vec::new();
    let (mut counts_ok, mut worst_float, mut worst_recombination) = (true, 0.0f64, 0.0f64);
    for xi in [XiChoice::Xi1, XiChoice::Xi3] {
        let model = bichannel_model(beta, RHO, xi)?;
        let spec = model.chain.channels.expect("bi-channel model defines channels");
        let cfg = engine(100, 1, model.z_max);
        let records: Vec<(ChannelRecord, usize)> = replicate(n_runs, &format!("criterion-10-{xi}"), |rng| {
            let r = run_ams(&model, &cfg, None, rng)?;
            Ok((channel_record(&r, &spec), r.target_count()))
        })?;
        for (rec, hits) in &records {
            counts_ok &= rec.m_b_upper + rec.m_b_lower == rec.m_b && rec.m_b == *hits;
            let gap = (rec.p_upper + rec.p_lower - rec.p_hat).abs();
            worst_float = worst_float.max(if rec.p_hat > 0.0 { gap / rec.p_hat } else { gap });
        }
        let recs: Vec<ChannelRecord> = records.iter().map(|(r, _)| *r).collect();
        let stats = channel_stats(&recs)?;
        worst_recombination = worst_recombination.max((stats.recombined() - stats.p_bar).abs());
        let p: Vec<f64> = recs.iter().map(|r| r.p_hat).collect();
        let a = aggregate(&p)?;
        for n0 in [10, 100] {
            let (large, small) = partial_averages(&p, n0)?;
            let n = p.len() as f64;
            let recombined = (n0 as f64 * large + (n - n0 as f64) * small) / n;
            worst_recombination = worst_recombination.max((recombined - a.mean).abs());
        }
        parts.push(format!(
            "{xi} {} (upper {:.3e}, lower {:.3e})",
            show(&a),
            stats.p_upper_mean,
            stats.p_lower_mean
        ));
        intervals.push(Interval::from(&a));
    }
    let chain = bichannel_model(beta, RHO, XiChoice::Xi1)?;
    let mc = direct_mc_parallel(&chain.chain, 10_000_000, chain.path_cap, &streams("criterion-10-mc"))?;
    intervals.push(Interval::from(&mc));
    parts.push(format!("direct MC {}", show_mc(&mc)));
    let overlap = all_overlap(&intervals);
    Ok(Outcome::new(
        overlap && counts_ok && worst_float <= 1e-12 && worst_recombination <= RECOMBINATION_TOL,
        format!(
            "{}; overlap {overlap}; channel counts add up {counts_ok}, max relative float gap {worst_float:.1e}; \
             max recombination gap {worst_recombination:.1e}",
            parts.join("; ")
        ),
    ))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("output directory exists") {
            let path = entry.expect("readable entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.strip_prefix(dir).expect("inside dir").display().to_string();
                files.push((name, fs::read(&path).expect("readable file")));
            }
        }
    }
    files.sort();
    files
}

const DETERMINISM_CONFIGS: &[&str] = &[
    r#"
[model]
kind = "gamblers-ruin"
p_up = 0.4
start = 1
top = 9
[algorithm]
kind = "ams"
n_rep = 50
k = 1
[run]
n_runs = 400
seed = 1
[baseline]
samples = 20000
[sweep]
grid = { k = [1, 5], n_rep = [20, 50] }
"#,
    r#"
[model]
kind = "drifted-bm"
beta = 8.0
[algorithm]
kind = "ams-exact-k"
n_rep = 50
k = 2
[run]
n_runs = 200
seed = 2
"#,
    r#"
[model]
kind = "drifted-bm"
beta = 8.0
[algorithm]
kind = "biased-v2"
n_rep = 50
k = 1
[run]
n_runs = 200
seed = 3
"#,
    r#"
[model]
kind = "bichannel"
beta = 3.0
xi = "xi3"
[algorithm]
kind = "ams"
n_rep = 20
k = 1
[run]
n_runs = 50
seed = 4
"#,
    r#"
[model]
kind = "gaussian-bridge"
kappa = 7
z_max = 2.0
[algorithm]
kind = "ams"
n_rep = 30
k = 3
level_strategy = "random-subset"
subset_size = 10
[run]
n_runs = 200
seed = 5
"#,
];

fn criterion_11() -> Result<Outcome> {
    let tmp = tempfile::tempdir()?;
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (i, text) in DETERMINISM_CONFIGS.iter().enumerate() {
        let mut outputs = Vec::new();
        for (attempt, jobs) in [1usize, 4, 1].into_iter().enumerate() {
            let mut cfg = ExperimentConfig::from_toml_str(text)?;
            cfg.run.jobs = jobs;
            let out = tmp.path().join(format!("config-{i}-{attempt}"));
            run_experiment(&cfg, &out.join("run"))?;
            if cfg.sweep.is_some() {
                sweep(&cfg, &out.join("sweep"))?;
            }
            if let Some(b) = &cfg.baseline {
                mc_baseline(&cfg, b.samples, &out.join("baseline"))?;
            }
            outputs.push(read_dir_bytes(&out));
        }
        checked += outputs[0].len();
        if outputs[1] != outputs[0] || outputs[2] != outputs[0] {
            mismatches.push(i);
        }
    }
    Ok(Outcome::new(
        mismatches.is_empty(),
        format!(
            "{} configs, {checked} output files compared at jobs 1, 4 and 1 again; mismatching configs {mismatches:?}",
            DETERMINISM_CONFIGS.len()
        ),
    ))
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut failed = Vec::new();
    let mut report = |n: u32, start: Instant, outcome: Result<Outcome>| {
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed.push(n);
        }
        println!("criterion {n}: {} {detail} ({secs:.1} s)", if pass { "PASS" } else { "FAIL" });
    };

    // Criterion 8 compares against the estimate of criterion 2.
    let mut reference = None;
    for n in 1..=11 {
        if !wanted(n) && !(n == 2 && wanted(8)) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 => criterion_1(),
            2 => criterion_2().map(|(o, a)| {
                reference = Some(a);
                o
            }),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => match &reference {
                Some(a) => criterion_8(a),
                None => Err(ams_core::Error::InvalidArgument("criterion 2 produced no estimate".into())),
            },
            9 => criterion_9(),
            10 => criterion_10(),
            _ => criterion_11(),
        };
        if wanted(n) {
            report(n, start, outcome);
        }
    }

    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
