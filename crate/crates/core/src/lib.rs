//! Multi-echelon inventory optimization laboratory.
//!
//! The crate simulates supply networks with backorders and stochastic lead
//! times, derives benchmark base-stock levels with a decomposition and
//! aggregation heuristic, and trains actor-critic policies (single agent,
//! multi-agent with a shared critic, and iterative multi-agent) against it.

pub mod distributions;
pub mod error;
pub mod experiment;
pub mod heuristic;
pub mod learning;
pub mod network;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
