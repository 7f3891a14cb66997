//! Algorithmic variants and the static Gaussian-bridge model.
//!
//! The [`biased`] module is for demonstrating what goes wrong when ties are
//! mishandled; it is not meant for estimation.

pub mod biased;
pub mod bridge;
pub mod exact_k;

pub use bridge::{BridgeModel, BridgeState};
pub use exact_k::{exact_k_resample, ExactKModel};
