//! Bayesian vertex nomination on attributed graphs.
//!
//! Given a graph where a few vertices are known to be red and every edge
//! colour is observed, a Metropolis-within-Gibbs sampler estimates the
//! posterior probability that each remaining vertex is red. The vertex with
//! the highest probability is nominated. The crate also carries the linear
//! fusion baseline and a Monte Carlo study harness.

pub mod error;
pub mod experiments;
pub mod graph;
pub mod likelihood;
pub mod mcmc;
pub mod nomination;

pub use error::{Error, Result};

/// Numerical tolerances shared by tests and runtime invariant checks.
pub mod tolerance {
    /// PMF normalisation over the full `(r, s)` support.
    pub const NORMALIZATION: f64 = 1e-9;
    /// Re-marginalising a conditional-times-marginal decomposition.
    pub const MARGINALIZATION: f64 = 1e-10;
    /// Algebraic identities such as merging equal-`p` binomials.
    pub const ALGEBRAIC: f64 = 1e-12;
    /// `F(F^-1(u)) = u` for the conditional prior CDFs.
    pub const INVERSE_CDF: f64 = 1e-12;
    /// Simplified versus full-likelihood Gibbs probability.
    pub const GAMMA_IDENTITY: f64 = 1e-10;
    /// Distance kept between MH proposals and the support boundary.
    pub const BOUNDARY_EPS: f64 = 1e-12;
}
