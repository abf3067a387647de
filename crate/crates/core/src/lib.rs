//! Simulation framework for personalized federated learning under non-IID
//! data. Each scheme produces a row-stochastic collaboration matrix α, and
//! client `i` aggregates `w_i ← Σ_j α_ij w_j` before local training.

pub mod cdiv;
pub mod config;
pub mod data;
pub mod divergence;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod hypernet;
pub mod math;
pub mod model;
pub mod report;
pub mod seed;
pub mod shapley;
pub mod sketch;

pub use error::{Error, Result};
