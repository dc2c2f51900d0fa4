//! The three joint distributions of `(r, s)`: latent green vertices,
//! latent red vertices and observed red vertices.
//!
//! Each is `P(s | r) P(r)` where `P(r)` is binomial and `P(s | r)` is a
//! convolution of the red edges to unobserved vertices with a binomial
//! thinning of the `r` edges to observed red vertices:
//!
//! ```text
//! green:         Bin(n-m'-1, p2)                       * Bin(r, p2/(p1+p2)),  r ~ Bin(m',   p1+p2)
//! latent red:    Bin(n-m, p2) * Bin(m-m'-1, q2)        * Bin(r, q2/(p1+q2)),  r ~ Bin(m',   p1+q2)
//! observed red:  Bin(n-m, p2) * Bin(m-m',   q2)        * Bin(r, q2/(p1+q2)),  r ~ Bin(m'-1, p1+q2)
//! ```

use super::pmf::{Pmf, ln_binom_unchecked};
use crate::error::{Error, Result};
use crate::graph::{Color, FullColoring, ModelParams, StatsBundle, VertexStats};

/// Which of the three distributions a vertex follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Green,
    LatentRed,
    ObservedRed,
}

/// Per-parameter lookup tables for evaluating the likelihood.
///
/// Everything that depends only on `(n, m', params)` is built eagerly. The
/// red-vertex base convolutions depend on the total red count `m` and are
/// built on first use and kept for the lifetime of the tables.
#[derive(Debug, Clone)]
pub struct LikelihoodTables {
    n: usize,
    m_obs: usize,
    params: ModelParams,
    green_s: Pmf,
    thin_green: Vec<Pmf>,
    thin_red: Vec<Pmf>,
    ln_r_green: Vec<f64>,
    ln_r_latent_red: Vec<f64>,
    ln_r_observed: Vec<f64>,
    latent_red_base: Vec<Option<Pmf>>,
    observed_base: Vec<Option<Pmf>>,
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    // p1 + p2 = 0 only happens on the support boundary; r is then 0 surely.
    if den > 0.0 { (num / den).min(1.0) } else { 0.0 }
}

impl LikelihoodTables {
    pub fn new(n: usize, m_obs: usize, params: ModelParams) -> Result<Self> {
        if m_obs < 1 || m_obs >= n {
            return Err(Error::InvalidGraph(format!(
                "need 1 <= m' < n for likelihood evaluation, got m' = {m_obs}, n = {n}"
            )));
        }
        Ok(Self::new_unchecked(n, m_obs, params))
    }

    pub(crate) fn new_unchecked(n: usize, m_obs: usize, params: ModelParams) -> Self {
        let (p1, p2, q2) = (params.p1(), params.p2(), params.q2());
        let theta_green = ratio_or_zero(p2, p1 + p2);
        let theta_red = ratio_or_zero(q2, p1 + q2);
        let ln_r = |trials: usize, p: f64| -> Vec<f64> {
            (0..=m_obs).map(|r| ln_binom_unchecked(r as u64, trials as u64, p)).collect()
        };
        Self {
            n,
            m_obs,
            params,
            green_s: Pmf::binomial_unchecked(n - m_obs - 1, p2),
            thin_green: (0..=m_obs).map(|r| Pmf::binomial_unchecked(r, theta_green)).collect(),
            thin_red: (0..=m_obs).map(|r| Pmf::binomial_unchecked(r, theta_red)).collect(),
            ln_r_green: ln_r(m_obs, (p1 + p2).min(1.0)),
            ln_r_latent_red: ln_r(m_obs, (p1 + q2).min(1.0)),
            ln_r_observed: ln_r(m_obs - 1, (p1 + q2).min(1.0)),
            latent_red_base: vec![None; n + 1],
            observed_base: vec![None; n + 1],
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_observed(&self) -> usize {
        self.m_obs
    }

    fn ensure_base(&mut self, family: Family, m: usize) {
        let (n, m_obs) = (self.n, self.m_obs);
        let (p2, q2) = (self.params.p2(), self.params.q2());
        match family {
            Family::Green => {}
            Family::LatentRed => {
                assert!(m > m_obs && m <= n, "latent red base needs m' < m <= n (m = {m})");
                self.latent_red_base[m].get_or_insert_with(|| {
                    Pmf::binomial_unchecked(n - m, p2)
                        .convolve(&Pmf::binomial_unchecked(m - m_obs - 1, q2))
                });
            }
            Family::ObservedRed => {
                assert!(m >= m_obs && m <= n, "observed red base needs m' <= m <= n (m = {m})");
                self.observed_base[m].get_or_insert_with(|| {
                    Pmf::binomial_unchecked(n - m, p2)
                        .convolve(&Pmf::binomial_unchecked(m - m_obs, q2))
                });
            }
        }
    }

    /// `ln P(s | r)` for the given family; `m` is ignored for green vertices.
    pub fn ln_s_given_r(&mut self, family: Family, t: VertexStats, m: usize) -> f64 {
        let max_r = if family == Family::ObservedRed { self.m_obs - 1 } else { self.m_obs };
        if t.r > max_r {
            return f64::NEG_INFINITY;
        }
        self.ensure_base(family, m);
        let (base, thin) = match family {
            Family::Green => (&self.green_s, &self.thin_green[t.r]),
            Family::LatentRed => (self.latent_red_base[m].as_ref().unwrap(), &self.thin_red[t.r]),
            Family::ObservedRed => (self.observed_base[m].as_ref().unwrap(), &self.thin_red[t.r]),
        };
        base.ln_convolution_at(thin, t.s)
    }

    /// `ln P(r)` for the given family.
    pub fn ln_r(&self, family: Family, r: usize) -> f64 {
        let table = match family {
            Family::Green => &self.ln_r_green,
            Family::LatentRed => &self.ln_r_latent_red,
            Family::ObservedRed => &self.ln_r_observed,
        };
        table.get(r).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// `ln P(r, s)` for the given family.
    pub fn ln_joint(&mut self, family: Family, t: VertexStats, m: usize) -> f64 {
        let ln_r = self.ln_r(family, t.r);
        if ln_r == f64::NEG_INFINITY {
            return ln_r;
        }
        ln_r + self.ln_s_given_r(family, t, m)
    }

    pub fn f1_ln(&mut self, t: VertexStats) -> f64 {
        self.ln_joint(Family::Green, t, 0)
    }

    pub fn f2_ln(&mut self, t: VertexStats, m: usize) -> f64 {
        self.ln_joint(Family::LatentRed, t, m)
    }

    pub fn fprime_ln(&mut self, t: VertexStats, m: usize) -> f64 {
        self.ln_joint(Family::ObservedRed, t, m)
    }

    /// Log-likelihood of all statistics given the latent colours
    /// (in `stats.latent_ids` order).
    pub fn log_likelihood_latent(&mut self, stats: &StatsBundle, latent: &[Color]) -> f64 {
        let m = self.m_obs + latent.iter().filter(|c| c.is_red()).count();
        let mut total = 0.0;
        for (t, c) in stats.latent.iter().zip(latent) {
            total += match c {
                Color::Green => self.f1_ln(*t),
                Color::Red => self.f2_ln(*t, m),
            };
        }
        for t in &stats.observed {
            total += self.fprime_ln(*t, m);
        }
        total
    }
}

fn check_counts(t: VertexStats, n: usize, m_obs: usize, max_r: usize) -> Result<()> {
    if m_obs < 1 || m_obs >= n {
        return Err(Error::InvalidGraph(format!("need 1 <= m' < n, got m' = {m_obs}, n = {n}")));
    }
    if t.r > max_r || t.s >= n {
        return Err(Error::InvalidGraph(format!(
            "statistics {t:?} out of range (r <= {max_r}, s <= {})",
            n - 1
        )));
    }
    Ok(())
}

/// `ln f1(r, s)` for a latent green vertex.
pub fn f1_log(t: VertexStats, params: &ModelParams, n: usize, m_obs: usize) -> Result<f64> {
    check_counts(t, n, m_obs, m_obs)?;
    Ok(LikelihoodTables::new_unchecked(n, m_obs, *params).f1_ln(t))
}

/// `ln f2(r, s | m)` for a latent red vertex; requires `m' < m <= n`.
pub fn f2_log(
    t: VertexStats,
    m: usize,
    params: &ModelParams,
    n: usize,
    m_obs: usize,
) -> Result<f64> {
    check_counts(t, n, m_obs, m_obs)?;
    if m <= m_obs || m > n {
        return Err(Error::InvalidGraph(format!("latent red vertex needs m' < m <= n, got m = {m}")));
    }
    Ok(LikelihoodTables::new_unchecked(n, m_obs, *params).f2_ln(t, m))
}

/// `ln f'(r, s | m)` for an observed red vertex; requires `m' <= m <= n`.
pub fn fprime_log(
    t: VertexStats,
    m: usize,
    params: &ModelParams,
    n: usize,
    m_obs: usize,
) -> Result<f64> {
    check_counts(t, n, m_obs, m_obs.saturating_sub(1))?;
    if m < m_obs || m > n {
        return Err(Error::InvalidGraph(format!("observed red vertex needs m' <= m <= n, got m = {m}")));
    }
    Ok(LikelihoodTables::new_unchecked(n, m_obs, *params).fprime_ln(t, m))
}

/// Marginal of `s` for a green vertex, Bin(n-1, p2).
pub fn f1_s_marginal(params: &ModelParams, n: usize) -> Pmf {
    Pmf::binomial_unchecked(n - 1, params.p2())
}

/// Marginal of `s` for any red vertex, Bin(n-m, p2) * Bin(m-1, q2).
pub fn f2_s_marginal(m: usize, params: &ModelParams, n: usize) -> Result<Pmf> {
    if m < 1 || m > n {
        return Err(Error::InvalidGraph(format!("need 1 <= m <= n, got m = {m}")));
    }
    Ok(Pmf::binomial_unchecked(n - m, params.p2())
        .convolve(&Pmf::binomial_unchecked(m - 1, params.q2())))
}

/// The observed-red `s` marginal coincides with the latent-red one.
pub fn fprime_s_marginal(m: usize, params: &ModelParams, n: usize) -> Result<Pmf> {
    f2_s_marginal(m, params, n)
}

/// Log-likelihood of a bundle of statistics under a full colouring.
pub fn log_likelihood(
    stats: &StatsBundle,
    coloring: &FullColoring,
    params: &ModelParams,
) -> Result<f64> {
    stats.validate()?;
    let latent = coloring.latent_colors(stats)?;
    let mut tables = LikelihoodTables::new(stats.n, stats.m_observed(), *params)?;
    Ok(tables.log_likelihood_latent(stats, &latent))
}
