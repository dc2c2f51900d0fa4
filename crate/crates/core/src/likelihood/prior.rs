//! Prior stack and the conditional priors used as Metropolis proposals.
//!
//! `(p1, p2)` is Dirichlet(1, 1, 1), `q2 | p1, p2` is uniform on
//! `(p2, 1 - p1)`, giving the joint density `2 / (1 - p1 - p2)` on
//! `0 < p1 < 1, 0 < p2 < 1 - p1, p2 < q2 < 1 - p1`. Latent colours are
//! Bernoulli(psi) with psi ~ beta(alpha, beta).

use serde::{Deserialize, Serialize};

use super::family::log_likelihood;
use crate::error::{Error, Result};
use crate::graph::{FullColoring, ModelParams, StatsBundle};

/// Prior over the latent colour vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentPrior {
    /// Independent Bernoulli(psi) colours, zero latent reds allowed.
    #[default]
    Bernoulli,
    /// Bernoulli conditioned on at least one latent red. Reserved; rejected
    /// by [`PriorConfig::validate`].
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub latent_prior: LatentPrior,
}

impl PriorConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let prior = Self { alpha, beta, latent_prior: LatentPrior::Bernoulli };
        prior.validate()?;
        Ok(prior)
    }

    /// beta(2, n - m'): mode at `1 / (n - m')`, favouring a sparse set of
    /// latent reds.
    pub fn sparse_default(n: usize, m_obs: usize) -> Self {
        Self { alpha: 2.0, beta: (n - m_obs) as f64, latent_prior: LatentPrior::Bernoulli }
    }

    /// Dirichlet concentration for `(p0, p1, p2)`; fixed.
    pub fn dirichlet(&self) -> [f64; 3] {
        [1.0, 1.0, 1.0]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.latent_prior == LatentPrior::Truncated {
            return Err(Error::InvalidConfig(
                "the truncated latent prior (at least one latent red) has no conjugate \
                 psi update and is not implemented; use the Bernoulli prior"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// `ln f(p1, p2, q2)`; `-inf` outside the open support.
pub fn log_prior_pq(p1: f64, p2: f64, q2: f64) -> f64 {
    let inside = p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0 - p1 && q2 > p2 && q2 < 1.0 - p1;
    if inside { std::f64::consts::LN_2 - (1.0 - p1 - p2).ln() } else { f64::NEG_INFINITY }
}

/// Marginal prior density of `p1` (and of `p2`): beta(1, 2).
pub fn prior_p_marginal(p: f64) -> f64 {
    if p > 0.0 && p < 1.0 { 2.0 * (1.0 - p) } else { 0.0 }
}

/// Marginal prior density of `q2`: `2 [q2 ln((1 - q2)/q2) - ln(1 - q2)]`.
pub fn prior_q2_marginal(q2: f64) -> f64 {
    if q2 > 0.0 && q2 < 1.0 {
        2.0 * (q2 * ((1.0 - q2) / q2).ln() - (-q2).ln_1p())
    } else {
        0.0
    }
}

/// Unnormalised log posterior of `(Y, p1, p2, q2, psi)`.
pub fn log_posterior_kernel(
    stats: &StatsBundle,
    coloring: &FullColoring,
    params: &ModelParams,
    psi: f64,
    prior: &PriorConfig,
) -> Result<f64> {
    if !(psi > 0.0 && psi < 1.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let ll = log_likelihood(stats, coloring, params)?;
    let (n, m_obs) = (stats.n as f64, stats.m_observed() as f64);
    let m = coloring.red_count() as f64;
    Ok(ll
        + (m - m_obs + prior.alpha - 1.0) * psi.ln()
        + (n - m + prior.beta - 1.0) * (-psi).ln_1p()
        + log_prior_pq(params.p1(), params.p2(), params.q2()))
}

fn check_unit(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidParams(format!("uniform deviate {u} is not in [0, 1]")));
    }
    Ok(())
}

fn check_p1_conditioning(p2: f64, q2: f64) -> Result<()> {
    if !(p2 > 0.0 && q2 > p2 && q2 < 1.0) {
        return Err(Error::InvalidParams(format!(
            "p1 | p2, q2 needs 0 < p2 < q2 < 1, got p2 = {p2}, q2 = {q2}"
        )));
    }
    Ok(())
}

fn check_p2_conditioning(p1: f64, q2: f64) -> Result<()> {
    if !(p1 > 0.0 && q2 > 0.0 && p1 + q2 < 1.0) {
        return Err(Error::InvalidParams(format!(
            "p2 | p1, q2 needs p1, q2 > 0 and p1 + q2 < 1, got p1 = {p1}, q2 = {q2}"
        )));
    }
    Ok(())
}

fn check_q2_conditioning(p1: f64, p2: f64) -> Result<()> {
    if !(p1 > 0.0 && p2 > 0.0 && p1 + p2 < 1.0) {
        return Err(Error::InvalidParams(format!(
            "q2 | p1, p2 needs p1, p2 > 0 and p1 + p2 < 1, got p1 = {p1}, p2 = {p2}"
        )));
    }
    Ok(())
}

/// Conditional prior CDF of `p1` on `(0, 1 - q2)`.
pub fn cdf_p1_given(p1: f64, p2: f64, q2: f64) -> Result<f64> {
    check_p1_conditioning(p2, q2)?;
    let p1 = p1.clamp(0.0, 1.0 - q2);
    let top = (-p2).ln_1p();
    Ok((top - (1.0 - p1 - p2).ln()) / (top - (q2 - p2).ln()))
}

/// Inverse of [`cdf_p1_given`]: `1 - p2 - (q2 - p2)^u (1 - p2)^(1 - u)`.
pub fn sample_p1_given(p2: f64, q2: f64, u: f64) -> Result<f64> {
    check_p1_conditioning(p2, q2)?;
    check_unit(u)?;
    Ok(inverse_log_cdf(1.0 - p2, q2 - p2, u))
}

/// Conditional prior CDF of `p2` on `(0, q2)`.
pub fn cdf_p2_given(p2: f64, p1: f64, q2: f64) -> Result<f64> {
    check_p2_conditioning(p1, q2)?;
    let p2 = p2.clamp(0.0, q2);
    let top = (-p1).ln_1p();
    Ok((top - (1.0 - p1 - p2).ln()) / (top - (1.0 - p1 - q2).ln()))
}

/// Inverse of [`cdf_p2_given`]: `1 - p1 - (1 - p1 - q2)^u (1 - p1)^(1 - u)`.
pub fn sample_p2_given(p1: f64, q2: f64, u: f64) -> Result<f64> {
    check_p2_conditioning(p1, q2)?;
    check_unit(u)?;
    Ok(inverse_log_cdf(1.0 - p1, 1.0 - p1 - q2, u))
}

/// Conditional prior CDF of `q2`: uniform on `(p2, 1 - p1)`.
pub fn cdf_q2_given(q2: f64, p1: f64, p2: f64) -> Result<f64> {
    check_q2_conditioning(p1, p2)?;
    Ok(((q2 - p2) / (1.0 - p1 - p2)).clamp(0.0, 1.0))
}

pub fn sample_q2_given(p1: f64, p2: f64, u: f64) -> Result<f64> {
    check_q2_conditioning(p1, p2)?;
    check_unit(u)?;
    Ok(p2 + u * (1.0 - p1 - p2))
}

/// `top - low^u top^(1-u)`, the shared shape of both `p` inverse CDFs, where
/// the density is proportional to `1 / (top - x)` on `(0, top - low)`.
fn inverse_log_cdf(top: f64, low: f64, u: f64) -> f64 {
    top - (u * low.ln() + (1.0 - u) * top.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q2_marginal_at_half() {
        assert!((prior_q2_marginal(0.5) - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn q2_marginal_integrates_to_one() {
        // midpoint rule; the log singularity at 0 is integrable
        let k = 200_000;
        let h = 1.0 / k as f64;
        let total: f64 = (0..k).map(|i| prior_q2_marginal((i as f64 + 0.5) * h) * h).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn p_marginal_integrates_to_one() {
        let k = 10_000;
        let h = 1.0 / k as f64;
        let total: f64 = (0..k).map(|i| prior_p_marginal((i as f64 + 0.5) * h) * h).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn joint_prior_support() {
        assert_eq!(log_prior_pq(0.2, 0.2, 0.1), f64::NEG_INFINITY);
        assert_eq!(log_prior_pq(0.0, 0.2, 0.3), f64::NEG_INFINITY);
        assert_eq!(log_prior_pq(0.5, 0.2, 0.5), f64::NEG_INFINITY);
        assert!((log_prior_pq(0.25, 0.15, 0.25) - (2.0f64 / 0.6).ln()).abs() < 1e-12);
    }

    #[test]
    fn inverse_cdf_endpoints() {
        let (p2, q2) = (0.15, 0.25);
        assert!(sample_p1_given(p2, q2, 0.0).unwrap().abs() < 1e-15);
        assert!((sample_p1_given(p2, q2, 1.0).unwrap() - (1.0 - q2)).abs() < 1e-15);
        let (p1, q2) = (0.25, 0.25);
        assert!(sample_p2_given(p1, q2, 0.0).unwrap().abs() < 1e-15);
        assert!((sample_p2_given(p1, q2, 1.0).unwrap() - q2).abs() < 1e-15);
        assert_eq!(sample_q2_given(0.25, 0.15, 0.0).unwrap(), 0.15);
        assert!((sample_q2_given(0.25, 0.15, 1.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn invalid_conditioning_rejected() {
        assert!(sample_p1_given(0.3, 0.2, 0.5).is_err());
        assert!(sample_p2_given(0.6, 0.5, 0.5).is_err());
        assert!(sample_q2_given(0.6, 0.5, 0.5).is_err());
        assert!(sample_q2_given(0.2, 0.1, 1.5).is_err());
    }

    #[test]
    fn truncated_prior_rejected() {
        let prior =
            PriorConfig { alpha: 2.0, beta: 10.0, latent_prior: LatentPrior::Truncated };
        let err = prior.validate().unwrap_err().to_string();
        assert!(err.contains("not implemented"), "{err}");
        assert!(PriorConfig::new(0.0, 1.0).is_err());
        assert!(PriorConfig::new(2.0, -1.0).is_err());
    }
}
