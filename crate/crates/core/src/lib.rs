//! Online convex optimization with long-term, time-varying constraints.
//!
//! The crate provides the virtual-queue learner (with its two step-size
//! schedules), the Slater-condition variant with constant parameters, a
//! doubling-trick wrapper for unknown horizons, a generic online
//! saddle-point baseline, the inner convex solvers they rely on, metrics
//! (dynamic regret, cumulative violations, path length, constraint
//! variation) and seeded benchmark environments, plus an experiment runner
//! that writes deterministic CSV output.

pub mod algorithms;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod problem;
pub mod subsolver;
pub mod vecops;

pub use error::{Error, Result};
