//! Uncertainty-aware graph self-training.
//!
//! A two-layer GCN written from scratch (sparse propagation, hand-derived
//! gradients, Adam), an EM soft-label refinement loop with confidence-gated
//! pseudo-labelling, four comparison methods, and a seeded multi-run
//! experiment harness.

pub mod baselines;
pub mod data;
pub mod em;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod harness;
pub mod outcome;
pub mod seed;

pub use error::{Error, Result};
pub use outcome::{IterationStats, MethodId, RunOutcome, RunResult};
