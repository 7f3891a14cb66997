//! Config-driven batches of independent runs.
//!
//! A batch writes four files into its output directory:
//! `runs.csv` (one row per run), `summary.json`, `trace.csv` (running mean and
//! interval width at log-spaced run counts) and `config.toml` (the resolved
//! configuration). Run `m` (1-based) draws from stream `m` of a generator
//! keyed by the seed and a salt; the salt is 0 for single experiments and a
//! hash of the grid point for sweeps. Outputs therefore depend only on the
//! configuration and the seed, not on the number of worker threads.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{AlgorithmKind, BuiltModel, ExperimentConfig, ModelKind};

use crate::diagnostics::{
    aggregate, ancestry_report, channel_record, channel_stats, convergence_trace, log_checkpoints,
    partial_averages, Aggregate, ChannelRecord, ChannelStats, TracePoint,
};
use crate::dynamics::ChannelSpec;
use crate::error::{Error, Result};
use crate::gams::{run_ams, GamsConfig, Model, RunResult};
use crate::markov_path::{ChainModel, MarkovChain, StoppedPath};
use crate::oracle::{direct_mc, direct_mc_parallel, DenseBridgeSampler, OracleResult};
use crate::rng::{fnv1a, StreamFactory};
use crate::variants::biased::{run_biased, BiasedVariantKind};
use crate::variants::ExactKModel;

/// One row of `runs.csv`. Fields that do not apply are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub ok: bool,
    pub p_hat: Option<f64>,
    pub p_corr: Option<f64>,
    pub q_iter: Option<usize>,
    pub extinct: Option<bool>,
    /// Largest number of replicas retired in one iteration.
    pub k_max: Option<usize>,
    /// Final working replicas that reached `B` (trajectories hitting `B` for direct-mc).
    pub m_b: Option<usize>,
    pub m_b_upper: Option<usize>,
    pub m_b_lower: Option<usize>,
    pub p_upper: Option<f64>,
    pub p_lower: Option<f64>,
    /// Distinct initial ancestors of the final working replicas.
    pub ancestors: Option<usize>,
    pub error: Option<String>,
}

impl RunRecord {
    fn empty(run: usize) -> Self {
        Self {
            run,
            ok: true,
            p_hat: None,
            p_corr: None,
            q_iter: None,
            extinct: None,
            k_max: None,
            m_b: None,
            m_b_upper: None,
            m_b_lower: None,
            p_upper: None,
            p_lower: None,
            ancestors: None,
            error: None,
        }
    }

    fn failed(run: usize, err: &Error) -> Self {
        Self {
            ok: false,
            error: Some(err.to_string()),
            ..Self::empty(run)
        }
    }

    fn from_run<S>(run: usize, res: &RunResult<S>) -> Self {
        Self {
            p_hat: Some(res.p_hat),
            p_corr: Some(res.p_corr),
            q_iter: Some(res.q_iter),
            extinct: Some(res.extinct),
            k_max: Some(res.k_history.iter().copied().max().unwrap_or(0)),
            m_b: Some(res.target_count()),
            ancestors: ancestry_report(res).ok(),
            ..Self::empty(run)
        }
    }

    fn with_channels(mut self, c: ChannelRecord) -> Self {
        self.m_b_upper = Some(c.m_b_upper);
        self.m_b_lower = Some(c.m_b_lower);
        self.p_upper = Some(c.p_upper);
        self.p_lower = Some(c.p_lower);
        self
    }

    fn channel(&self) -> Option<ChannelRecord> {
        Some(ChannelRecord {
            p_hat: self.p_hat?,
            p_upper: self.p_upper?,
            p_lower: self.p_lower?,
            m_b: self.m_b?,
            m_b_upper: self.m_b_upper?,
            m_b_lower: self.m_b_lower?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialAverage {
    pub n0: usize,
    pub largest: f64,
    pub rest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub message: String,
}

/// Statistics over the successful runs of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_runs: usize,
    pub n_ok: usize,
    pub n_errors: usize,
    pub failures: Vec<RunFailure>,
    pub aggregate: Option<Aggregate>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub partial_averages: Vec<PartialAverage>,
    pub extinct_runs: usize,
    pub mean_q_iter: Option<f64>,
    pub mean_ancestors: Option<f64>,
    pub channel_stats: Option<ChannelStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub seed: u64,
    pub salt: u64,
    pub point: Option<String>,
    pub config: ExperimentConfig,
    pub summary: Summary,
}

/// Statistics of a list of run records, in run order.
pub fn summarize(records: &[RunRecord], partial_n0: &[usize]) -> Summary {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.ok && r.p_hat.is_some()).collect();
    let values: Vec<f64> = ok.iter().filter_map(|r| r.p_hat).collect();
    let agg = aggregate(&values).ok();
    let partial = partial_n0
        .iter()
        .filter_map(|&n0| {
            partial_averages(&values, n0)
                .ok()
                .map(|(largest, rest)| PartialAverage { n0, largest, rest })
        })
        .collect();
    let mean_of = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    let channels: Vec<ChannelRecord> = ok.iter().filter_map(|r| r.channel()).collect();
    let channel_stats = if !channels.is_empty() && channels.len() == ok.len() {
        channel_stats(&channels).ok()
    } else {
        None
    };
    let failures: Vec<RunFailure> = records
        .iter()
        .filter(|r| !r.ok)
        .map(|r| RunFailure {
            run: r.run,
            message: r.error.clone().unwrap_or_default(),
        })
        .collect();
    Summary {
        n_runs: records.len(),
        n_ok: ok.len(),
        n_errors: failures.len(),
        failures,
        ci_lower: agg.map(|a| a.lower()),
        ci_upper: agg.map(|a| a.upper()),
        aggregate: agg,
        partial_averages: partial,
        extinct_runs: ok.iter().filter(|r| r.extinct == Some(true)).count(),
        mean_q_iter: mean_of(ok.iter().filter_map(|r| r.q_iter.map(|q| q as f64)).collect()),
        mean_ancestors: mean_of(ok.iter().filter_map(|r| r.ancestors.map(|a| a as f64)).collect()),
        channel_stats,
    }
}

fn chain_run<C, R>(
    model: &ChainModel<C>,
    cfg: &ExperimentConfig,
    gams: &GamsConfig,
    channels: Option<ChannelSpec>,
    run: usize,
    rng: &mut R,
) -> Result<RunRecord>
where
    C: MarkovChain + Clone,
    R: Rng,
{
    let with_channels = |rec: RunRecord, res: &RunResult<StoppedPath<C::Point>>| match channels {
        Some(spec) => rec.with_channels(channel_record(res, &spec)),
        None => rec,
    };
    match cfg.algorithm.kind {
        AlgorithmKind::Ams => {
            let res = run_ams(model, gams, None, rng)?;
            Ok(with_channels(RunRecord::from_run(run, &res), &res))
        }
        AlgorithmKind::AmsExactK => {
            let mut exact = ExactKModel::new(model.clone());
            if let Some(cap) = cfg.algorithm.attempt_cap {
                exact.attempt_cap = cap;
            }
            let res = run_ams(&exact, gams, None, rng)?;
            Ok(with_channels(RunRecord::from_run(run, &res), &res))
        }
        AlgorithmKind::BiasedV1 | AlgorithmKind::BiasedV2 => {
            let kind = if cfg.algorithm.kind == AlgorithmKind::BiasedV1 {
                BiasedVariantKind::Version1
            } else {
                BiasedVariantKind::Version2
            };
            let res = run_biased(model, gams, kind, rng)?.result;
            Ok(with_channels(RunRecord::from_run(run, &res), &res))
        }
        AlgorithmKind::DirectMc => {
            let samples = cfg.algorithm.samples.unwrap_or(0);
            let o = direct_mc(&model.chain, samples, model.path_cap, rng)?;
            Ok(RunRecord {
                p_hat: Some(o.value),
                m_b: Some(o.hits as usize),
                ..RunRecord::empty(run)
            })
        }
    }
}

fn static_run<M: Model, R: Rng>(model: &M, gams: &GamsConfig, run: usize, rng: &mut R) -> Result<RunRecord> {
    let res = run_ams(model, gams, None, rng)?;
    Ok(RunRecord::from_run(run, &res))
}

fn run_one(model: &BuiltModel, cfg: &ExperimentConfig, gams: &GamsConfig, run: usize, streams: &StreamFactory) -> RunRecord {
    let mut rng = streams.stream(run as u64);
    let out = match model {
        BuiltModel::DriftedBm(m) => chain_run(m, cfg, gams, None, run, &mut rng),
        BuiltModel::Bichannel(m) => chain_run(m, cfg, gams, m.chain.channels, run, &mut rng),
        BuiltModel::AllenCahn(m) => chain_run(m, cfg, gams, None, run, &mut rng),
        BuiltModel::GamblersRuin(m) => chain_run(m, cfg, gams, None, run, &mut rng),
        BuiltModel::GaussianBridge(m) => static_run(m, gams, run, &mut rng),
    };
    out.unwrap_or_else(|e| RunRecord::failed(run, &e))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start {jobs} worker threads: {e}")))
}

/// Executes runs `1..=n_runs` of `cfg` with the given salt, without writing anything.
pub fn execute(cfg: &ExperimentConfig, salt: u64) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let gams = match cfg.algorithm.kind {
        AlgorithmKind::DirectMc => GamsConfig::new(2, 1, 0.0),
        _ => cfg.gams_config(&model)?,
    };
    let streams = StreamFactory::with_salt(cfg.run.seed, salt);
    let pool = thread_pool(cfg.run.jobs)?;
    Ok(pool.install(|| {
        (1..=cfg.run.n_runs)
            .into_par_iter()
            .map(|run| run_one(&model, cfg, &gams, run, &streams))
            .collect()
    }))
}

fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_trace(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in trace {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Successful estimates in run order.
pub fn estimates(records: &[RunRecord]) -> Vec<f64> {
    records.iter().filter(|r| r.ok).filter_map(|r| r.p_hat).collect()
}

fn write_outputs(
    cfg: &ExperimentConfig,
    salt: u64,
    point: Option<String>,
    records: &[RunRecord],
    out: &Path,
) -> Result<ExperimentSummary> {
    fs::create_dir_all(out)?;
    write_records(&out.join("runs.csv"), records)?;
    let values = estimates(records);
    let trace = convergence_trace(&values, &log_checkpoints(values.len(), cfg.run.trace_per_decade));
    write_trace(&out.join("trace.csv"), &trace)?;
    fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;
    let summary = ExperimentSummary {
        seed: cfg.run.seed,
        salt,
        point,
        config: cfg.clone(),
        summary: summarize(records, &cfg.run.partial_n0),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Runs one experiment and writes its outputs into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentSummary> {
    let records = execute(cfg, 0)?;
    write_outputs(cfg, 0, None, &records, out)
}

/// Salt of a grid point: FNV-1a of its canonical label.
pub fn point_salt(point: &BTreeMap<String, toml::Value>) -> u64 {
    fnv1a(config::point_label(point).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub point: String,
    pub dir: String,
    pub n_ok: usize,
    pub n_errors: usize,
    pub mean: Option<f64>,
    pub ci_width: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

/// Runs every grid point into `out/point-<index>` and writes `sweep.csv`, `sweep.json` and `table.md`.
pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ExperimentSummary>> {
    cfg.validate()?;
    if cfg.sweep.is_none() {
        return Err(Error::config("the config has no [sweep] table"));
    }
    let points = cfg.sweep_points();
    let configs = points
        .iter()
        .map(|p| cfg.with_point(p))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out)?;
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for (i, (point, pcfg)) in points.iter().zip(&configs).enumerate() {
        let salt = point_salt(point);
        let dir = format!("point-{i:03}");
        let records = execute(pcfg, salt)?;
        let s = write_outputs(pcfg, salt, Some(config::point_label(point)), &records, &out.join(&dir))?;
        rows.push(SweepRow {
            index: i,
            point: config::point_label(point),
            dir,
            n_ok: s.summary.n_ok,
            n_errors: s.summary.n_errors,
            mean: s.summary.aggregate.map(|a| a.mean),
            ci_width: s.summary.aggregate.map(|a| a.ci_width),
            ci_lower: s.summary.ci_lower,
            ci_upper: s.summary.ci_upper,
        });
        summaries.push(s);
    }
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_json(&out.join("sweep.json"), &rows)?;
    fs::write(out.join("table.md"), sweep_table(&points, &rows))?;
    Ok(summaries)
}

/// One column per grid point, one row per swept parameter, then the mean and interval width.
pub fn sweep_table(points: &[BTreeMap<String, toml::Value>], rows: &[SweepRow]) -> String {
    let mut names: Vec<&String> = points.iter().flat_map(|p| p.keys()).collect();
    names.sort();
    names.dedup();
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4e}"));
    let mut lines = Vec::new();
    let header = std::iter::once(String::new())
        .chain(rows.iter().map(|r| format!("#{}", r.index)))
        .collect::<Vec<_>>();
    lines.push(format!("| {} |", header.join(" | ")));
    lines.push(format!("|{}", "---|".repeat(header.len())));
    for name in names {
        let cells: Vec<String> = points
            .iter()
            .map(|p| match p.get(name) {
                Some(toml::Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
                None => "-".to_string(),
            })
            .collect();
        lines.push(format!("| {name} | {} |", cells.join(" | ")));
    }
    let means: Vec<String> = rows.iter().map(|r| fmt_opt(r.mean)).collect();
    lines.push(format!("| mean | {} |", means.join(" | ")));
    let widths: Vec<String> = rows.iter().map(|r| fmt_opt(r.ci_width)).collect();
    lines.push(format!("| ci width | {} |", widths.join(" | ")));
    lines.join("\n") + "\n"
}

/// Re-aggregates `runs.csv` and writes `diagnose.json` next to it (or into `out`).
pub fn diagnose(runs_csv: &Path, partial_n0: &[usize], out: Option<&Path>) -> Result<Summary> {
    let records = read_records(runs_csv)?;
    let summary = summarize(&records, partial_n0);
    let dir: PathBuf = match out {
        Some(o) => o.to_path_buf(),
        None => runs_csv.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("diagnose.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub seed: u64,
    pub samples: u64,
    pub config: ExperimentConfig,
    pub result: OracleResult,
}

/// Direct Monte Carlo on the config's model with `samples` trajectories, written to `out/baseline.json`.
pub fn mc_baseline(cfg: &ExperimentConfig, samples: u64, out: &Path) -> Result<BaselineSummary> {
    cfg.validate()?;
    if samples == 0 {
        return Err(Error::config("the baseline needs a positive number of samples"));
    }
    let model = cfg.build_model()?;
    let streams = StreamFactory::with_salt(cfg.run.seed, fnv1a(b"mc-baseline"));
    let pool = thread_pool(cfg.run.jobs)?;
    let result = pool.install(|| match &model {
        BuiltModel::DriftedBm(m) => direct_mc_parallel(&m.chain, samples, m.path_cap, &streams),
        BuiltModel::Bichannel(m) => direct_mc_parallel(&m.chain, samples, m.path_cap, &streams),
        BuiltModel::AllenCahn(m) => direct_mc_parallel(&m.chain, samples, m.path_cap, &streams),
        BuiltModel::GamblersRuin(m) => direct_mc_parallel(&m.chain, samples, m.path_cap, &streams),
        BuiltModel::GaussianBridge(m) => {
            DenseBridgeSampler::new(m.kappa)?.exceedance_probability(m.z_max, samples, &streams)
        }
    })?;
    let summary = BaselineSummary {
        seed: cfg.run.seed,
        samples,
        config: cfg.clone(),
        result,
    };
    fs::create_dir_all(out)?;
    write_json(&out.join("baseline.json"), &summary)?;
    Ok(summary)
}
