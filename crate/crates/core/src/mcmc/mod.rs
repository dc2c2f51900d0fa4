//! Metropolis-within-Gibbs sampler over latent colours, edge parameters and
//! the colour hyperparameter psi.
//!
//! One iteration is: a sequential Gibbs sweep over the latent colours, a
//! conjugate beta draw of psi, then Metropolis-Hastings updates of `p1`,
//! `p2` and `q2` in that order, each proposing from its conditional prior
//! given the freshest values of the other two.

mod cache;
mod diagnostics;
mod gibbs;
mod mh;
mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use diagnostics::autocorrelation;
pub use gibbs::{gamma_i, gamma_i_full, gibbs_sweep_y, gibbs_update_psi};
pub use mh::{Param, mh_update_param};
pub use trace::{ChainTrace, IterationRecord};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Color, ModelParams, StatsBundle, compute_stats};
use crate::likelihood::PriorConfig;
use cache::TermCache;

/// Sampler state: latent colours (in `StatsBundle::latent_ids` order), edge
/// parameters and psi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    y: Vec<Color>,
    params: ModelParams,
    psi: f64,
    m_obs: usize,
    latent_red: usize,
    iteration: usize,
}

impl ChainState {
    pub fn new(y: Vec<Color>, params: ModelParams, psi: f64, m_obs: usize) -> Result<Self> {
        if !params.is_interior() {
            return Err(Error::InvalidParams(format!(
                "sampler parameters must lie inside the prior support, got {params:?}"
            )));
        }
        if !(psi > 0.0 && psi < 1.0) {
            return Err(Error::InvalidParams(format!("psi must be in (0, 1), got {psi}")));
        }
        let latent_red = y.iter().filter(|c| c.is_red()).count();
        Ok(Self { y, params, psi, m_obs, latent_red, iteration: 0 })
    }

    pub fn y(&self) -> &[Color] {
        &self.y
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Total red count, observed plus latent.
    pub fn m(&self) -> usize {
        self.m_obs + self.latent_red
    }

    pub fn m_observed(&self) -> usize {
        self.m_obs
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub(crate) fn set_color(&mut self, i: usize, color: Color) {
        match (self.y[i], color) {
            (Color::Green, Color::Red) => self.latent_red += 1,
            (Color::Red, Color::Green) => self.latent_red -= 1,
            _ => {}
        }
        self.y[i] = color;
    }

    pub(crate) fn set_params(&mut self, params: ModelParams) {
        debug_assert!(params.is_interior(), "{params:?}");
        self.params = params;
    }

    pub(crate) fn set_psi(&mut self, psi: f64) {
        self.psi = psi;
    }
}

/// Iteration counts and seed for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
    /// Keep per-iteration colour snapshots and the burn-in records.
    pub record_traces: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { burn_in: 1000, samples: 1000, seed: 0, record_traces: false }
    }
}

impl SamplerConfig {
    /// 10000 burn-in plus 10000 retained iterations.
    pub fn long(seed: u64) -> Self {
        Self { burn_in: 10_000, samples: 10_000, seed, record_traces: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Number of draws from the prior tried before giving up on a start with a
/// finite likelihood.
const MAX_INIT_DRAWS: usize = 1000;

/// Draw `(p1, p2, q2)` from the joint prior: `(p0, p1, p2)` uniform on the
/// simplex, then `q2` uniform on `(p2, 1 - p1)`.
pub fn sample_prior_params<R: Rng + ?Sized>(rng: &mut R) -> ModelParams {
    loop {
        let e: [f64; 3] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
        let total: f64 = e.iter().sum();
        let (p1, p2) = (e[1] / total, e[2] / total);
        let q2 = p2 + rng.random::<f64>() * (1.0 - p1 - p2);
        if let Ok(params) = ModelParams::new(p1, p2, q2) {
            return params;
        }
    }
}

/// All-green colours, parameters drawn from the prior, psi at its prior mean.
pub fn initial_state<R: Rng + ?Sized>(
    stats: &StatsBundle,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<ChainState> {
    let y = vec![Color::Green; stats.n_latent()];
    let psi = prior.alpha / (prior.alpha + prior.beta);
    for _ in 0..MAX_INIT_DRAWS {
        let params = sample_prior_params(rng);
        let mut cache = TermCache::new(stats, params);
        if cache.log_likelihood(stats, &y).is_finite() {
            return ChainState::new(y, params, psi, stats.m_observed());
        }
    }
    Err(Error::Initialization(format!(
        "no prior draw in {MAX_INIT_DRAWS} attempts gave a finite likelihood"
    )))
}

/// Owns the state, the per-parameter term cache and the current
/// log-likelihood for one chain.
pub struct Sampler<'a> {
    stats: &'a StatsBundle,
    prior: PriorConfig,
    state: ChainState,
    cache: TermCache,
    log_lik: f64,
    gamma_checks: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(stats: &'a StatsBundle, prior: PriorConfig, state: ChainState) -> Result<Self> {
        stats.validate()?;
        prior.validate()?;
        if state.y.len() != stats.n_latent() || state.m_obs != stats.m_observed() {
            return Err(Error::InvalidConfig("chain state does not match the graph".into()));
        }
        let mut cache = TermCache::new(stats, state.params);
        let log_lik = cache.log_likelihood(stats, &state.y);
        Ok(Self { stats, prior, state, cache, log_lik, gamma_checks: 0 })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    /// Current log-likelihood.
    pub fn log_likelihood(&self) -> f64 {
        self.log_lik
    }

    /// One full iteration; returns the MH acceptance flags for
    /// `(p1, p2, q2)`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> [bool; 3] {
        gibbs::sweep(&mut self.state, self.stats, &mut self.cache, &mut self.gamma_checks, rng);
        self.log_lik = self.cache.log_likelihood(self.stats, &self.state.y);
        gibbs_update_psi(&mut self.state, &self.prior, rng);
        let mut accepted = [false; 3];
        for (flag, which) in accepted.iter_mut().zip([Param::P1, Param::P2, Param::Q2]) {
            *flag = mh::step(
                which,
                &mut self.state,
                self.stats,
                &mut self.cache,
                &mut self.log_lik,
                rng,
            );
        }
        self.state.iteration += 1;
        accepted
    }
}

/// Run a chain on a graph.
pub fn run_chain(
    graph: &AttributedGraph,
    prior: &PriorConfig,
    config: &SamplerConfig,
) -> Result<ChainTrace> {
    let stats = compute_stats(graph);
    run_chain_on_stats(&stats, prior, config)
}

/// Run a chain on precomputed statistics.
pub fn run_chain_on_stats(
    stats: &StatsBundle,
    prior: &PriorConfig,
    config: &SamplerConfig,
) -> Result<ChainTrace> {
    config.validate()?;
    prior.validate()?;
    stats.validate()?;
    if stats.n_latent() == 0 {
        return Err(Error::InvalidGraph("graph has no latent vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let state = initial_state(stats, prior, &mut rng)?;
    let mut sampler = Sampler::new(stats, *prior, state)?;
    let mut trace = ChainTrace::new(stats.latent_ids.clone(), config);
    for _ in 0..config.burn_in + config.samples {
        let accepted = sampler.step(&mut rng);
        trace.record(sampler.state(), accepted);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::io::{TABLE1_MATRIX, read_matrix_str};

    fn table1_stats() -> StatsBundle {
        compute_stats(&read_matrix_str(TABLE1_MATRIX, true).unwrap())
    }

    #[test]
    fn single_sample_chain() {
        let stats = table1_stats();
        let prior = PriorConfig::new(2.0, 10.0).unwrap();
        let config = SamplerConfig { burn_in: 0, samples: 1, seed: 5, record_traces: true };
        let trace = run_chain_on_stats(&stats, &prior, &config).unwrap();
        assert_eq!(trace.records().len(), 1);
        let rec = &trace.records()[0];
        assert!(ModelParams::new(rec.p1, rec.p2, rec.q2).is_ok());
        assert!(rec.psi > 0.0 && rec.psi < 1.0);
    }

    #[test]
    fn same_seed_same_trace() {
        let stats = table1_stats();
        let prior = PriorConfig::new(2.0, 10.0).unwrap();
        let config = SamplerConfig { burn_in: 50, samples: 200, seed: 11, record_traces: true };
        let a = run_chain_on_stats(&stats, &prior, &config).unwrap();
        let b = run_chain_on_stats(&stats, &prior, &config).unwrap();
        assert_eq!(a, b);
        let c = run_chain_on_stats(&stats, &prior, &SamplerConfig { seed: 12, ..config }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn states_stay_valid() {
        let stats = table1_stats();
        let prior = PriorConfig::new(2.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let state = initial_state(&stats, &prior, &mut rng).unwrap();
        assert!(state.y().iter().all(|c| *c == Color::Green));
        assert_eq!(state.psi(), 2.0 / 12.0);
        let mut sampler = Sampler::new(&stats, prior, state).unwrap();
        for _ in 0..500 {
            sampler.step(&mut rng);
            let s = sampler.state();
            assert!(s.params().is_interior());
            assert!(s.psi() > 0.0 && s.psi() < 1.0);
            let reds = s.y().iter().filter(|c| c.is_red()).count();
            assert_eq!(s.m(), 2 + reds);
            let mut cache = TermCache::new(&stats, *s.params());
            assert!((cache.log_likelihood(&stats, s.y()) - sampler.log_likelihood()).abs() < 1e-9);
        }
    }

    #[test]
    fn prior_draws_in_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            assert!(sample_prior_params(&mut rng).is_interior());
        }
    }

    #[test]
    fn rejects_bad_config() {
        let stats = table1_stats();
        let prior = PriorConfig::new(2.0, 10.0).unwrap();
        let config = SamplerConfig { burn_in: 0, samples: 0, seed: 0, record_traces: false };
        assert!(run_chain_on_stats(&stats, &prior, &config).is_err());
    }
}
