//! Seed-reproducible simulator and benchmark harness for distributed
//! wireless power control.
//!
//! Compares the classical distributed power control iteration against
//! memory-equipped agents that pick transmit powers through a pluggable
//! decision backend, optionally exchanging natural-language cooperation
//! proposals. The numeric core (radio environment, baseline iteration,
//! metrics) is generic over the float width via [`scalar::Scalar`];
//! the harness layers (agents, gateway, orchestrator, persistence) run
//! in f64, and the aliases at the crate root name those concrete types.

// Validation code negates comparisons (`!(x > zero)`) on purpose: NaN fails
// every ordered comparison, so the negated form rejects NaN along with the
// out-of-range values, while the rewrite clippy suggests (`x <= zero`) would
// let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod dpc;
pub mod error;
pub mod gateway;
pub mod persist;
pub mod radio;
pub mod report;
pub mod rng;
pub mod runlog;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};

/// f64 scenario, the harness's working type.
pub type Scenario = radio::Scenario<f64>;
pub type GenConfig = radio::GenConfig<f64>;
pub type PowerVector = radio::PowerVector<f64>;
pub type LinkMetrics = radio::LinkMetrics<f64>;
pub type FeasibilityReport = dpc::FeasibilityReport<f64>;

/// Single-precision variants for callers trading accuracy for footprint.
pub type Scenario32 = radio::Scenario<f32>;
pub type GenConfig32 = radio::GenConfig<f32>;
pub type PowerVector32 = radio::PowerVector<f32>;
pub type LinkMetrics32 = radio::LinkMetrics<f32>;
pub type FeasibilityReport32 = dpc::FeasibilityReport<f32>;
