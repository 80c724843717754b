//! Asymmetric collaborative filtering for drug–adverse-reaction prediction.
//!
//! The main model scores a drug/reaction pair by fusing three signals: a deep
//! tower over the drug's binary structure descriptors, a shallow latent-factor
//! tower, and a generalised-matrix-factorisation head that reuses the shallow
//! tower's reaction embedding. Classic latent-factor baselines (MF, GMF,
//! MLP-CF, NMF) share the same training and evaluation pipeline.
//!
//! Everything is deterministic given a seed: initialisation, batch order,
//! fold assignment, and synthetic data generation all flow from explicitly
//! seeded ChaCha8 streams.

pub mod cli;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod neural;
pub mod params_io;

pub use error::{AdrnetError, Result};
