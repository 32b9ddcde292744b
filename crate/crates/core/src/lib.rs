//! Information-theoretic limits of community detection in the symmetric
//! two-groups stochastic block model.
//!
//! The crate evaluates the single-letter formula for the per-vertex mutual
//! information, solves the effective-SNR fixed point, runs Bayes-optimal AMP
//! on sampled spiked-Wigner and SBM instances, and provides an exact
//! brute-force posterior for small graphs that every analytic identity can be
//! checked against.

pub mod amp;
pub mod error;
pub mod fixed_point;
pub mod linalg;
pub mod models;
pub mod numfmt;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod scalar_channel;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
pub use quadrature::QuadratureRule;
