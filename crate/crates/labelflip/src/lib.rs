//! Label-flip data poisoning attacks against binary classifiers.
//!
//! The crate mounts availability attacks that contaminate only the *labels*
//! of a training set, leaving features untouched. Candidate instances are
//! selected by the magnitude of boosted-tree gradients, then a family of
//! strategies decides which labels to flip under a budget:
//!
//! * [`attack::gds`] — randomized search over flip indicators,
//! * [`attack::ogds`] — per-iteration linear-program selection,
//! * [`attack::sgds`] — sorting-based greedy equivalent for uniform costs,
//! * linear-flip and random-flip baselines.
//!
//! [`evaluation`] wraps the strategies into experiment protocols (budget
//! sweeps, transferability matrices, cost analysis, susceptibility reports),
//! and the `labelflip` binary exposes everything as a config-driven CLI.

pub mod attack;
pub mod classifier;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gbdt;
pub mod sampling;
pub mod seed;

pub use error::{Error, Result};
