use crate::graph::{Color, ModelParams, StatsBundle};
use crate::likelihood::{Family, LikelihoodTables};

/// Per-vertex log terms at fixed parameters, memoised by red count `m`.
///
/// The Gibbs probability for vertex `i` needs the conditional `s | r` terms
/// of every other red vertex at `m_{-i}` and `m_{-i} + 1`. Those only change
/// when the parameters or `m` change, so they are filled lazily per `m` and
/// reused across the sweep and across iterations until a proposal is
/// accepted.
#[derive(Debug, Clone)]
pub(crate) struct TermCache {
    tables: LikelihoodTables,
    green: Vec<f64>,
    red_r: Vec<f64>,
    red_cond: Vec<Option<Vec<f64>>>,
    observed_cond: Vec<f64>,
    observed_r_total: f64,
}

impl TermCache {
    pub(crate) fn new(stats: &StatsBundle, params: ModelParams) -> Self {
        let mut tables = LikelihoodTables::new_unchecked(stats.n, stats.m_observed(), params);
        let green = stats.latent.iter().map(|&t| tables.f1_ln(t)).collect();
        let red_r = stats.latent.iter().map(|t| tables.ln_r(Family::LatentRed, t.r)).collect();
        let observed_r_total =
            stats.observed.iter().map(|t| tables.ln_r(Family::ObservedRed, t.r)).sum();
        Self {
            tables,
            green,
            red_r,
            red_cond: vec![None; stats.n + 1],
            observed_cond: vec![f64::NAN; stats.n + 1],
            observed_r_total,
        }
    }

    /// `ln f1(T(i))`.
    pub(crate) fn green(&self, i: usize) -> f64 {
        self.green[i]
    }

    /// `ln f2(R(i))`, the `m`-free factor of a latent red vertex.
    pub(crate) fn red_r(&self, i: usize) -> f64 {
        self.red_r[i]
    }

    /// `ln f2(S(i) | R(i), m)`.
    pub(crate) fn red_cond(&mut self, stats: &StatsBundle, i: usize, m: usize) -> f64 {
        let slot = self.red_cond[m].get_or_insert_with(|| vec![f64::NAN; stats.latent.len()]);
        if slot[i].is_nan() {
            slot[i] = self.tables.ln_s_given_r(Family::LatentRed, stats.latent[i], m);
        }
        slot[i]
    }

    /// `sum_k ln f'(S'(k) | R'(k), m)` over observed red vertices.
    pub(crate) fn observed_cond(&mut self, stats: &StatsBundle, m: usize) -> f64 {
        if self.observed_cond[m].is_nan() {
            let tables = &mut self.tables;
            self.observed_cond[m] = stats
                .observed
                .iter()
                .map(|&t| tables.ln_s_given_r(Family::ObservedRed, t, m))
                .sum();
        }
        self.observed_cond[m]
    }

    /// Full log-likelihood of the latent colouring.
    pub(crate) fn log_likelihood(&mut self, stats: &StatsBundle, y: &[Color]) -> f64 {
        let m = stats.m_observed() + y.iter().filter(|c| c.is_red()).count();
        let mut total = self.observed_r_total + self.observed_cond(stats, m);
        for (i, c) in y.iter().enumerate() {
            total += match c {
                Color::Green => self.green(i),
                Color::Red => self.red_r(i) + self.red_cond(stats, i, m),
            };
        }
        total
    }
}
