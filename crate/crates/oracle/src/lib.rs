//! Slow, independent reference computations used only by tests.
//!
//! Nothing here calls into `bvn-core`. Per-vertex statistic distributions
//! are built two ways (the closed convolution form and a dynamic programme
//! over the individual incident pairs), the posterior over colours is
//! enumerated exhaustively, and the edge parameters are integrated on a
//! midpoint grid.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

/// `C(n, k) p^k (1-p)^(n-k)` by direct products.
pub fn binom(k: usize, n: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k_small = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k_small {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

pub fn binom_vec(n: usize, p: f64) -> Vec<f64> {
    (0..=n).map(|k| binom(k, n, p)).collect()
}

pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Which per-vertex distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Green,
    LatentRed,
    ObservedRed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub p1: f64,
    pub p2: f64,
    pub q2: f64,
}

impl Params {
    pub fn new(p1: f64, p2: f64, q2: f64) -> Self {
        Self { p1, p2, q2 }
    }
}

/// Joint pmf of `(R, S)` from the closed form: `R` binomial over the
/// observed reds, `S | R` a convolution of binomials. Indexed `[r][s]`,
/// `r in 0..=m'`, `s in 0..n`.
pub fn vertex_pmf_formula(kind: Kind, n: usize, m_obs: usize, m: usize, p: Params) -> Vec<Vec<f64>> {
    let (r_trials, r_prob, theta, parts): (usize, f64, f64, Vec<(usize, f64)>) = match kind {
        Kind::Green => (m_obs, p.p1 + p.p2, p.p2 / (p.p1 + p.p2), vec![(n - m_obs - 1, p.p2)]),
        Kind::LatentRed => (
            m_obs,
            p.p1 + p.q2,
            p.q2 / (p.p1 + p.q2),
            vec![(n - m, p.p2), (m - m_obs - 1, p.q2)],
        ),
        Kind::ObservedRed => (
            m_obs - 1,
            p.p1 + p.q2,
            p.q2 / (p.p1 + p.q2),
            vec![(n - m, p.p2), (m - m_obs, p.q2)],
        ),
    };
    let mut base = vec![1.0];
    for (trials, prob) in parts {
        base = convolve(&base, &binom_vec(trials, prob));
    }
    let mut table = vec![vec![0.0; n]; m_obs + 1];
    for r in 0..=r_trials {
        let cond = convolve(&base, &binom_vec(r, theta));
        let pr = binom(r, r_trials, r_prob);
        for (s, c) in cond.iter().enumerate() {
            if s < n {
                table[r][s] += pr * c;
            } else {
                assert!(*c == 0.0 || pr == 0.0, "mass beyond degree n - 1");
            }
        }
    }
    table
}

/// Same pmf built pair by pair: every other vertex contributes
/// `(dR, dS)` according to the colours at both ends.
pub fn vertex_pmf_dp(kind: Kind, n: usize, m_obs: usize, m: usize, p: Params) -> Vec<Vec<f64>> {
    let p0 = 1.0 - p.p1 - p.p2;
    let q0 = 1.0 - p.p1 - p.q2;
    // (count, counts toward R, probs of (absent, green, red))
    let pairs: Vec<(usize, bool, [f64; 3])> = match kind {
        Kind::Green => vec![
            (m_obs, true, [p0, p.p1, p.p2]),
            (n - 1 - m_obs, false, [p0, p.p1, p.p2]),
        ],
        Kind::LatentRed => vec![
            (m_obs, true, [q0, p.p1, p.q2]),
            (m - m_obs - 1, false, [q0, p.p1, p.q2]),
            (n - m, false, [p0, p.p1, p.p2]),
        ],
        Kind::ObservedRed => vec![
            (m_obs - 1, true, [q0, p.p1, p.q2]),
            (m - m_obs, false, [q0, p.p1, p.q2]),
            (n - m, false, [p0, p.p1, p.p2]),
        ],
    };
    let mut table = vec![vec![0.0; n]; m_obs + 1];
    table[0][0] = 1.0;
    for (count, to_observed, probs) in pairs {
        for _ in 0..count {
            let mut next = vec![vec![0.0; n]; m_obs + 1];
            for r in 0..=m_obs {
                for s in 0..n {
                    let w = table[r][s];
                    if w == 0.0 {
                        continue;
                    }
                    let dr = usize::from(to_observed);
                    next[r][s] += w * probs[0];
                    if r + dr <= m_obs {
                        next[r + dr][s] += w * probs[1];
                        if s + 1 < n {
                            next[r + dr][s + 1] += w * probs[2];
                        }
                    }
                }
            }
            table = next;
        }
    }
    table
}

/// Statistics of one small instance, computed here from the adjacency
/// matrix rather than taken from the library.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub n: usize,
    pub observed_ids: Vec<usize>,
    /// `(r, s)` per observed red vertex.
    pub observed: Vec<(usize, usize)>,
    pub latent_ids: Vec<usize>,
    /// `(r, s)` per latent vertex, ascending id.
    pub latent: Vec<(usize, usize)>,
}

/// `adj[u][v]` is 0 (no edge), 1 (green) or 2 (red); symmetric.
pub fn instance_from_adjacency(adj: &[Vec<u8>], observed: &[usize]) -> Instance {
    let n = adj.len();
    let is_obs = |v: usize| observed.contains(&v);
    let stat = |v: usize| {
        let r = (0..n).filter(|&u| u != v && is_obs(u) && adj[v][u] != 0).count();
        let s = (0..n).filter(|&u| u != v && adj[v][u] == 2).count();
        (r, s)
    };
    let mut observed_ids = observed.to_vec();
    observed_ids.sort_unstable();
    let latent_ids: Vec<usize> = (0..n).filter(|&v| !is_obs(v)).collect();
    Instance {
        n,
        observed: observed_ids.iter().map(|&v| stat(v)).collect(),
        latent: latent_ids.iter().map(|&v| stat(v)).collect(),
        observed_ids,
        latent_ids,
    }
}

fn ln_f(kind: Kind, inst: &Instance, m: usize, p: Params, t: (usize, usize)) -> f64 {
    let table = vertex_pmf_formula(kind, inst.n, inst.observed.len(), m, p);
    table.get(t.0).and_then(|row| row.get(t.1)).copied().unwrap_or(0.0).ln()
}

/// Product of per-vertex terms for the latent colouring `red`.
pub fn log_likelihood(inst: &Instance, red: &[bool], p: Params) -> f64 {
    let m = inst.observed.len() + red.iter().filter(|&&r| r).count();
    let mut total = 0.0;
    for &t in &inst.observed {
        total += ln_f(Kind::ObservedRed, inst, m, p, t);
    }
    for (&t, &r) in inst.latent.iter().zip(red) {
        let kind = if r { Kind::LatentRed } else { Kind::Green };
        total += ln_f(kind, inst, m, p, t);
    }
    total
}

/// Conditional probability that latent vertex `i` is red, from the two
/// complete likelihoods and the prior odds.
pub fn exact_gamma(inst: &Instance, red: &[bool], i: usize, p: Params, psi: f64) -> f64 {
    let mut y = red.to_vec();
    y[i] = true;
    let lr = log_likelihood(inst, &y, p) + psi.ln();
    y[i] = false;
    let lg = log_likelihood(inst, &y, p) + (1.0 - psi).ln();
    1.0 / (1.0 + (lg - lr).exp())
}

/// Posterior quantities from exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub marginal_red: Vec<f64>,
    pub mean_p1: f64,
    pub mean_p2: f64,
    pub mean_q2: f64,
    pub mean_psi: f64,
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Accumulates `sum w_j x_j` and `sum w_j` for weights given in log space.
struct LogAccumulator {
    max: f64,
    total: f64,
    sums: Vec<f64>,
}

impl LogAccumulator {
    fn new(k: usize) -> Self {
        Self { max: f64::NEG_INFINITY, total: 0.0, sums: vec![0.0; k] }
    }

    fn add(&mut self, ln_w: f64, values: impl Fn(usize) -> f64) {
        if ln_w == f64::NEG_INFINITY {
            return;
        }
        if ln_w > self.max {
            let scale = (self.max - ln_w).exp();
            self.total *= scale;
            self.sums.iter_mut().for_each(|s| *s *= scale);
            self.max = ln_w;
        }
        let w = (ln_w - self.max).exp();
        self.total += w;
        for (k, s) in self.sums.iter_mut().enumerate() {
            *s += w * values(k);
        }
    }

    fn means(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.total).collect()
    }
}

/// Exact posterior under the model with `(p0, p1, p2)` uniform on the
/// simplex, `q2 | p` uniform on `(p2, 1 - p1)`, psi ~ beta(alpha, beta)
/// and independent Bernoulli(psi) colours.
///
/// Colours are enumerated; psi is integrated in closed form; the edge
/// parameters are integrated with the midpoint rule on `cells^3` cells in
/// the unit-cube coordinates `p1 = a`, `p2 = (1 - a) b`,
/// `q2 = p2 + (1 - p1 - p2) c`, where prior density times Jacobian is
/// `2 (1 - a)`.
pub fn exact_posterior(inst: &Instance, alpha: f64, beta: f64, cells: usize) -> ExactPosterior {
    let l = inst.latent.len();
    let m_obs = inst.observed.len();
    assert!(l <= 16, "enumeration over 2^{l} colourings");
    let h = 1.0 / cells as f64;
    let ln_b0 = ln_beta(alpha, beta);
    let psi_term: Vec<f64> = (0..=l).map(|k| ln_beta(k as f64 + alpha, (l - k) as f64 + beta) - ln_b0).collect();
    let psi_mean: Vec<f64> = (0..=l).map(|k| (k as f64 + alpha) / (l as f64 + alpha + beta)).collect();
    // values: marginals 0..l, then p1, p2, q2, psi
    let mut acc = LogAccumulator::new(l + 4);
    for ia in 0..cells {
        let a = (ia as f64 + 0.5) * h;
        for ib in 0..cells {
            let b = (ib as f64 + 0.5) * h;
            for ic in 0..cells {
                let c = (ic as f64 + 0.5) * h;
                let p1 = a;
                let p2 = (1.0 - a) * b;
                let q2 = p2 + (1.0 - p1 - p2) * c;
                let p = Params::new(p1, p2, q2);
                let ln_w = (2.0 * (1.0 - a)).ln() + 3.0 * h.ln();
                let lookup = |table: &[Vec<f64>], t: (usize, usize)| {
                    table.get(t.0).and_then(|row| row.get(t.1)).copied().unwrap_or(0.0).ln()
                };
                let green_table = vertex_pmf_formula(Kind::Green, inst.n, m_obs, m_obs, p);
                let green: Vec<f64> = inst.latent.iter().map(|&t| lookup(&green_table, t)).collect();
                let red: Vec<Vec<f64>> = (0..=l)
                    .map(|k| {
                        if k == 0 {
                            return vec![f64::NAN; l];
                        }
                        let table = vertex_pmf_formula(Kind::LatentRed, inst.n, m_obs, m_obs + k, p);
                        inst.latent.iter().map(|&t| lookup(&table, t)).collect()
                    })
                    .collect();
                let obs: Vec<f64> = (0..=l)
                    .map(|k| {
                        let table = vertex_pmf_formula(Kind::ObservedRed, inst.n, m_obs, m_obs + k, p);
                        inst.observed.iter().map(|&t| lookup(&table, t)).sum()
                    })
                    .collect();
                for mask in 0u32..(1 << l) {
                    let k = mask.count_ones() as usize;
                    let mut ll = obs[k] + psi_term[k] + ln_w;
                    for i in 0..l {
                        ll += if mask >> i & 1 == 1 { red[k][i] } else { green[i] };
                    }
                    acc.add(ll, |j| match j {
                        j if j < l => f64::from(mask >> j & 1),
                        j if j == l => p1,
                        j if j == l + 1 => p2,
                        j if j == l + 2 => q2,
                        _ => psi_mean[k],
                    });
                }
            }
        }
    }
    let means = acc.means();
    ExactPosterior {
        marginal_red: means[..l].to_vec(),
        mean_p1: means[l],
        mean_p2: means[l + 1],
        mean_q2: means[l + 2],
        mean_psi: means[l + 3],
    }
}

/// Pearson chi-square goodness of fit. Cells with expected count below
/// `min_expected` are pooled into one. Returns `(statistic, df, p-value)`.
pub fn chi_square_test(counts: &[u64], probs: &[f64], min_expected: f64) -> (f64, usize, f64) {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * total;
        if e < min_expected {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    } else {
        assert!(pooled_obs == 0.0, "observations in a zero-probability cell");
    }
    let df = cells.saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    (stat, df, p)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// Stephens small-sample correction. Returns `(D, p-value)`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    (d, kolmogorov_survival(lambda))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
