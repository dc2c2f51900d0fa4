//! Finite-support probability mass functions stored as `exp(log_scale) * weights`.
//!
//! Weights are rescaled so the largest is 1; the scale lives in log space.
//! Convolutions sum directly over the (short) supports in linear space.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    offset: usize,
    log_scale: f64,
    weights: Vec<f64>,
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("probability {p} is not in [0, 1]")));
    }
    Ok(())
}

/// `C(n, k) p^k (1-p)^(n-k)`; zero for `k > n`.
pub fn binom_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    Ok(ln_binom_pmf(k, n, p)?.exp())
}

/// Log of [`binom_pmf`], evaluated through log-gamma; `-inf` outside the support.
pub fn ln_binom_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(ln_binom_unchecked(k, n, p))
}

/// `ln C(n, k)` as a sum of `min(k, n - k)` log ratios. Log-gamma
/// differences lose ~1e-13 absolute accuracy once `ln n!` is in the hundreds.
fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

pub(crate) fn ln_binom_unchecked(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let head = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let tail = if k == n { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
    ln_choose(n, k) + head + tail
}

impl Pmf {
    pub fn point_mass(at: usize) -> Self {
        Self { offset: at, log_scale: 0.0, weights: vec![1.0] }
    }

    /// Bin(n, p). Weights are generated from the mode outwards by the ratio
    /// recurrence, so far tails underflow to zero instead of overflowing.
    pub fn binomial(n: usize, p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self::binomial_unchecked(n, p))
    }

    pub(crate) fn binomial_unchecked(n: usize, p: f64) -> Self {
        if n == 0 || p <= 0.0 {
            return Self::point_mass(0);
        }
        if p >= 1.0 {
            return Self::point_mass(n);
        }
        let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
        let odds = p / (1.0 - p);
        let mut weights = vec![0.0; n + 1];
        weights[mode] = 1.0;
        for k in mode..n {
            weights[k + 1] = weights[k] * odds * (n - k) as f64 / (k + 1) as f64;
        }
        for k in (0..mode).rev() {
            weights[k] = weights[k + 1] / odds * (k + 1) as f64 / (n - k) as f64;
        }
        let log_scale = ln_binom_unchecked(mode as u64, n as u64, p);
        Self { offset: 0, log_scale, weights }
    }

    /// From explicit probabilities starting at `offset`.
    pub fn from_probs(offset: usize, probs: &[f64]) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParams("pmf weights must be finite and non-negative".into()));
        }
        let max = probs.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(Error::InvalidParams("pmf has no mass".into()));
        }
        Ok(Self {
            offset,
            log_scale: max.ln(),
            weights: probs.iter().map(|w| w / max).collect(),
        })
    }

    /// Smallest support point.
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Largest support point.
    pub fn max_support(&self) -> usize {
        self.offset + self.weights.len() - 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.ln_prob(k).exp()
    }

    pub fn ln_prob(&self, k: usize) -> f64 {
        match k.checked_sub(self.offset).and_then(|i| self.weights.get(i)) {
            Some(&w) if w > 0.0 => self.log_scale + w.ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Probabilities over `offset..=max_support`.
    pub fn probs(&self) -> Vec<f64> {
        let scale = self.log_scale.exp();
        self.weights.iter().map(|w| w * scale).collect()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.log_scale.exp()
    }

    /// `(g * h)(y) = sum_z g(y - z) h(z)` over the full support.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let mut weights = vec![0.0; self.weights.len() + other.weights.len() - 1];
        for (i, &a) in self.weights.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.weights.iter().enumerate() {
                weights[i + j] += a * b;
            }
        }
        let max = weights.iter().cloned().fold(0.0, f64::max);
        for w in &mut weights {
            *w /= max;
        }
        Pmf {
            offset: self.offset + other.offset,
            log_scale: self.log_scale + other.log_scale + max.ln(),
            weights,
        }
    }

    pub fn double_convolve(f: &Pmf, g: &Pmf, h: &Pmf) -> Pmf {
        f.convolve(&g.convolve(h))
    }

    /// `ln (g * h)(y)` without materialising the whole convolution.
    pub fn ln_convolution_at(&self, other: &Pmf, y: usize) -> f64 {
        let lo_off = self.offset + other.offset;
        if y < lo_off {
            return f64::NEG_INFINITY;
        }
        let y = y - lo_off;
        // self index i = y - j must lie in 0..len(self)
        let j_lo = y.saturating_sub(self.weights.len() - 1);
        let j_hi = y.min(other.weights.len() - 1);
        if j_lo > j_hi {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0;
        for j in j_lo..=j_hi {
            acc += self.weights[y - j] * other.weights[j];
        }
        if acc > 0.0 {
            self.log_scale + other.log_scale + acc.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}
