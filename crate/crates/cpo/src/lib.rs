//! Change-point portfolio optimization.
//!
//! The pipeline: load price panels ([`ingest`]), detect structural breaks in
//! each asset's return series with a nonparametric sequential test
//! ([`changepoint`]), measure how similar the assets' break patterns are
//! ([`setdist`]), and allocate portfolio weights by maximizing an excess
//! return ratio penalized by break-pattern affinity ([`optimizer`]). A
//! mean-variance baseline, a GARCH-with-jumps simulator ([`synthetic`]),
//! hierarchical clustering ([`cluster`]) and a train/test backtest harness
//! ([`backtest`]) round out the toolkit.
//!
//! All randomness is seeded and all data-parallel kernels reduce
//! deterministically, so identical inputs produce bitwise-identical outputs
//! whether or not the `parallel` feature (rayon) is enabled.

pub mod backtest;
pub mod changepoint;
pub mod cluster;
mod error;
pub mod ingest;
pub mod optimizer;
mod par;
pub mod setdist;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
