//! Robust congestion tolls from historical cost data.
//!
//! A toll operator observes only the moments of the travel-cost margin between
//! a toll road and its free alternatives. The toll is chosen to maximize
//! revenue against the worst distribution nature can pick within those
//! moments.

pub mod cli;
pub mod config;
pub mod distribution;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod history;
pub mod ingest;
pub mod lp;
pub mod metrics;
pub mod nature;
pub mod network;
pub mod pricing;

/// Monetary quantity (tolls, costs, revenue).
pub type Money = f64;
/// Probability in `[0, 1]`.
pub type Probability = f64;

pub use distribution::DiscreteDistribution;
pub use error::{Error, Result};
pub use grid::PriceGrid;
pub use history::{estimate_moment_envelope, CostHistory, MomentEnvelope};
pub use nature::{NatureObjective, NatureSolution};
