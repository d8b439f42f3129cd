//! Benchmark for predicted individual treatment effects (PITE).
//!
//! Simulates randomized trials, fits separate outcome models per arm with a
//! set of regression learners, and scores the predicted effects against the
//! known truth, either on a held-out split or on a matched external
//! population.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod learners;
pub mod matcher;
pub mod metrics;
pub mod output;
pub mod pite;
pub mod rng;
pub mod simgen;

pub use error::{Error, Result};
