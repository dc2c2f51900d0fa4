//! Binomial convolutions, the likelihood families and the prior stack.

mod family;
mod pmf;
mod prior;

pub use family::{
    Family, LikelihoodTables, f1_log, f1_s_marginal, f2_log, f2_s_marginal, fprime_log,
    fprime_s_marginal, log_likelihood,
};
pub use pmf::{Pmf, binom_pmf, ln_binom_pmf};
pub use prior::{
    LatentPrior, PriorConfig, cdf_p1_given, cdf_p2_given, cdf_q2_given, log_posterior_kernel,
    log_prior_pq, prior_p_marginal, prior_q2_marginal, sample_p1_given, sample_p2_given,
    sample_q2_given,
};
