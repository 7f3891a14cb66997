//! Adaptive multilevel splitting for rare events of Markov chains.
//!
//! The [`gams`] module holds the generic engine, [`markov_path`] turns any
//! Markov chain with a reaction coordinate into a splitting model,
//! [`dynamics`] provides the discretized Langevin test models, [`variants`]
//! the exact-k, biased and Gaussian-bridge variants, [`oracle`] independent
//! reference computations and [`diagnostics`] the statistics used to read runs.
//! [`experiment`] wires everything into config-driven batches of runs.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod gams;
pub mod level;
pub mod markov_path;
pub mod oracle;
pub mod rng;
pub mod variants;

pub use error::{Error, Result};
pub use gams::{run_ams, run_gams, GamsConfig, LevelStrategy, Model, RunResult};
pub use level::ExtendedLevel;
