use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ChainState;
use super::cache::TermCache;
use crate::error::{Error, Result};
use crate::graph::{ModelParams, StatsBundle};
use crate::likelihood::{sample_p1_given, sample_p2_given, sample_q2_given};
use crate::tolerance::BOUNDARY_EPS;

/// Edge parameter updated by one Metropolis-Hastings step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    P1,
    P2,
    Q2,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::P1, Param::P2, Param::Q2];

    pub fn name(self) -> &'static str {
        match self {
            Param::P1 => "p1",
            Param::P2 => "p2",
            Param::Q2 => "q2",
        }
    }
}

/// Draw from the conditional prior of `which` given the other two, pulled
/// `BOUNDARY_EPS` inside the open interval. `None` if the interval is too
/// narrow to hold an interior point.
fn propose(which: Param, params: &ModelParams, u: f64) -> Option<ModelParams> {
    let (p1, p2, q2) = (params.p1(), params.p2(), params.q2());
    let (x, lo, hi) = match which {
        Param::P1 => (sample_p1_given(p2, q2, u).ok()?, 0.0, 1.0 - q2),
        Param::P2 => (sample_p2_given(p1, q2, u).ok()?, 0.0, q2),
        Param::Q2 => (sample_q2_given(p1, p2, u).ok()?, p2, 1.0 - p1),
    };
    if hi - lo <= 2.0 * BOUNDARY_EPS {
        return None;
    }
    let x = x.clamp(lo + BOUNDARY_EPS, hi - BOUNDARY_EPS);
    let proposed = match which {
        Param::P1 => params.with_p1(x),
        Param::P2 => params.with_p2(x),
        Param::Q2 => params.with_q2(x),
    };
    proposed.is_interior().then_some(proposed)
}

/// One MH step. With the conditional prior as proposal the prior and
/// proposal densities cancel and the acceptance ratio is the likelihood
/// ratio. On acceptance the cache and log-likelihood are replaced.
pub(crate) fn step<R: Rng + ?Sized>(
    which: Param,
    state: &mut ChainState,
    stats: &StatsBundle,
    cache: &mut TermCache,
    log_lik: &mut f64,
    rng: &mut R,
) -> bool {
    let u: f64 = rng.random();
    let log_u = rng.random::<f64>().ln();
    let Some(proposed) = propose(which, &state.params, u) else {
        return false;
    };
    let mut candidate = TermCache::new(stats, proposed);
    let ll_new = candidate.log_likelihood(stats, &state.y);
    // NaN (both -inf) compares false and rejects
    if log_u < ll_new - *log_lik {
        state.set_params(proposed);
        *cache = candidate;
        *log_lik = ll_new;
        true
    } else {
        false
    }
}

/// Standalone MH update of one parameter at the state's current colours.
pub fn mh_update_param<R: Rng + ?Sized>(
    which: Param,
    state: &mut ChainState,
    stats: &StatsBundle,
    rng: &mut R,
) -> Result<bool> {
    if state.y.len() != stats.n_latent() || state.m_obs != stats.m_observed() {
        return Err(Error::InvalidConfig("chain state does not match the graph".into()));
    }
    let mut cache = TermCache::new(stats, state.params);
    let mut log_lik = cache.log_likelihood(stats, &state.y);
    Ok(step(which, state, stats, &mut cache, &mut log_lik, rng))
}
