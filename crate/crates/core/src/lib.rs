//! Privacy risk quantification for tabular synthetic data.
//!
//! The crate covers statistical privacy indicators (identical match share,
//! distance to closest record and its k-NN variant), no-box attack
//! simulations (singling out, DOMIAS, linkability, attribute inference),
//! control-set and canary baselines, and risk models that inject a known
//! amount of risk into a synthetic release (leaky, overfitting,
//! differential privacy). The [`harness`] module ties them together into
//! sweeps with bootstrap confidence intervals and correlation matrices.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod rng;
pub mod tabular;

pub use error::{Error, Result};
pub mod datasets;
pub mod indicators;
pub mod stats;
pub mod attacks;
pub mod risk;
pub mod baselines;
pub mod harness;
