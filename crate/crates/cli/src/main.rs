//! `ams`: run, sweep and diagnose adaptive multilevel splitting experiments.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a run or an
//! output step fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ams_core::experiment::{self, ExperimentConfig, Summary};
use ams_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ams", version, about = "Adaptive multilevel splitting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run N independent realizations of one configuration.
    Run(Common),
    /// Run every point of the configuration's [sweep] grid.
    Sweep(Common),
    /// Estimate the probability by direct Monte Carlo on the configured model.
    McBaseline {
        #[command(flatten)]
        common: Common,
        /// Number of trajectories (overrides [baseline] samples).
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Re-aggregate a per-run CSV file.
    Diagnose {
        /// Path to runs.csv.
        #[arg(long)]
        runs: PathBuf,
        /// Output directory for diagnose.json (defaults to the CSV's directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sizes of the partial averages over the largest values.
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100])]
        partial_n0: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the file).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core (overrides the file).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (overrides the file).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(jobs) = self.jobs {
            cfg.run.jobs = jobs;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.run.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

fn report(summary: &Summary, dir: &Path) {
    match summary.aggregate {
        Some(a) => println!(
            "{}: {} ok, {} failed, mean {:.6e}, ci width {:.3e}, ci [{:.6e}, {:.6e}]",
            dir.display(),
            summary.n_ok,
            summary.n_errors,
            a.mean,
            a.ci_width,
            a.lower(),
            a.upper()
        ),
        None => println!("{}: {} ok, {} failed", dir.display(), summary.n_ok, summary.n_errors),
    }
}

/// Outcome of a command: failed runs are reported but do not stop sibling runs.
fn execute(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, out) = common.load()?;
            let s = experiment::run_experiment(&cfg, &out)?;
            report(&s.summary, &out);
            Ok(s.summary.n_errors == 0)
        }
        Command::Sweep(common) => {
            let (cfg, out) = common.load()?;
            let summaries = experiment::sweep(&cfg, &out)?;
            for s in &summaries {
                print!("{} ", s.point.as_deref().unwrap_or(""));
                report(&s.summary, &out);
            }
            println!("table written to {}", out.join("table.md").display());
            Ok(summaries.iter().all(|s| s.summary.n_errors == 0))
        }
        Command::McBaseline { common, samples } => {
            let (cfg, out) = common.load()?;
            let samples = samples
                .or_else(|| cfg.baseline.as_ref().map(|b| b.samples))
                .ok_or_else(|| Error::Config("set --samples or [baseline] samples".into()))?;
            let b = experiment::mc_baseline(&cfg, samples, &out)?;
            println!(
                "{}: {} hits in {} samples, p = {:.6e} +- {:.3e} (95%)",
                out.display(),
                b.result.hits,
                b.result.samples,
                b.result.value,
                b.result.half_width()
            );
            Ok(true)
        }
        Command::Diagnose { runs, out, partial_n0 } => {
            let s = experiment::diagnose(&runs, &partial_n0, out.as_deref())?;
            report(&s, &runs);
            Ok(s.n_errors == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some runs failed; see summary.json");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
