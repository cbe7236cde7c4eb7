//! Task offloading and compute allocation in three-layer low-altitude MEC
//! networks: link and cost models, scenario sampling, exact and heuristic
//! solvers, and a dataset/benchmark pipeline.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the double-precision variants used by the harness.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cost;
pub mod error;
pub mod harness;
pub mod instance;
pub mod scalar;
pub mod solve;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Instance = instance::ProblemInstance<f64>;
pub type Record = instance::DatasetRecord<f64>;
pub type Config = instance::ScenarioConfig<f64>;
pub type Solution = solve::Solution<f64>;
