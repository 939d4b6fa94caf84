//! Ergodic Monte Carlo for stationary path laws.
//!
//! A single decreasing-step Euler trajectory is simulated once; every shifted
//! window of it is treated as a sample path of the stationary regime and
//! averaged with weights. On top of that engine sit the Heston and
//! Barndorff-Nielsen–Shephard stationary stochastic volatility models and
//! Asian/European pricers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod levy;
pub mod models;
pub mod oracles;
pub mod pricing;
mod quadrature;
pub mod rng;
pub mod schedule;
pub mod schemes;

pub use error::{Error, Result};
pub use schedule::Schedule;
