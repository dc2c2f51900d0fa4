use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn std_normal() -> Normal {
    Normal::standard()
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Jackknife acceleration for the mean:
/// `a = sum d^3 / (6 (sum d^2)^1.5)` with `d = mean(theta_(.)) - theta_(i)`.
/// `None` when the jackknife values do not vary.
fn acceleration(samples: &[f64]) -> Option<f64> {
    let n = samples.len() as f64;
    let total: f64 = samples.iter().sum();
    let jack: Vec<f64> = samples.iter().map(|x| (total - x) / (n - 1.0)).collect();
    let jbar = mean(&jack);
    let (mut s2, mut s3) = (0.0, 0.0);
    for j in &jack {
        let d = jbar - j;
        s2 += d * d;
        s3 += d * d * d;
    }
    (s2 > 0.0).then(|| s3 / (6.0 * s2.powf(1.5)))
}

/// Bias-corrected and accelerated bootstrap interval for the mean at
/// confidence `level` from `n_boot` resamples.
///
/// The bias correction counts resampled means equal to the estimate as half
/// below. All-equal samples give the point interval `(c, c)`.
pub fn bca_ci<R: Rng + ?Sized>(
    samples: &[f64],
    level: f64,
    n_boot: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("bootstrap needs at least one sample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence level {level} is not in (0, 1)")));
    }
    if n_boot < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least two resamples".into()));
    }
    let theta = mean(samples);
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok((samples[0], samples[0]));
    }
    let n = samples.len();
    let mut boot: Vec<f64> = (0..n_boot)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    boot.sort_by(f64::total_cmp);

    let alpha = (1.0 - level) / 2.0;
    let Some(a) = acceleration(samples) else {
        log::warn!("jackknife variance is zero; falling back to the percentile interval");
        return Ok((quantile(&boot, alpha), quantile(&boot, 1.0 - alpha)));
    };
    let below = boot.iter().filter(|&&b| b < theta).count() as f64;
    let ties = boot.iter().filter(|&&b| b == theta).count() as f64;
    let half = 0.5 / n_boot as f64;
    let frac = ((below + 0.5 * ties) / n_boot as f64).clamp(half, 1.0 - half);
    let normal = std_normal();
    let z0 = normal.inverse_cdf(frac);
    let adjust = |z: f64| normal.cdf(z0 + (z0 + z) / (1.0 - a * (z0 + z)));
    let lo = quantile(&boot, adjust(normal.inverse_cdf(alpha)));
    let hi = quantile(&boot, adjust(normal.inverse_cdf(1.0 - alpha)));
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(bca_ci(&[0.3; 10], 0.95, 100, &mut rng).unwrap(), (0.3, 0.3));
        assert!(bca_ci(&[], 0.95, 100, &mut rng).is_err());
        assert!(bca_ci(&[1.0, 0.0], 1.0, 100, &mut rng).is_err());
    }

    #[test]
    fn balanced_flags_match_percentile() {
        let samples: Vec<f64> = (0..400).map(|i| (i % 2) as f64).collect();
        assert!(acceleration(&samples).unwrap().abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (lo, hi) = bca_ci(&samples, 0.95, 10_000, &mut rng).unwrap();
        let half = 1.96 * (0.25f64 / 400.0).sqrt();
        assert!((lo - (0.5 - half)).abs() < 0.01, "{lo}");
        assert!((hi - (0.5 + half)).abs() < 0.01, "{hi}");
    }

    #[test]
    fn bernoulli_flags_against_normal_interval() {
        let samples: Vec<f64> = (0..1000).map(|i| f64::from(u8::from(i < 440))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (lo, hi) = bca_ci(&samples, 0.95, 10_000, &mut rng).unwrap();
        let half = 1.96 * (0.44f64 * 0.56 / 1000.0).sqrt();
        assert!(lo < 0.44 && 0.44 < hi);
        assert!((lo - (0.44 - half)).abs() < 0.006, "{lo}");
        assert!((hi - (0.44 + half)).abs() < 0.006, "{hi}");
        assert!(((hi - lo) - 0.06).abs() < 0.01);
    }

    #[test]
    fn skewed_flags_shift_interval() {
        // rare successes: BCA should push the interval to the right of the
        // symmetric normal interval
        let samples: Vec<f64> = (0..200).map(|i| f64::from(u8::from(i < 6))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (lo, hi) = bca_ci(&samples, 0.95, 10_000, &mut rng).unwrap();
        let p = 0.03;
        assert!(lo > 0.0 && lo < p && hi > p);
        assert!(hi - p > p - lo);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&xs, 0.0), 0.0);
        assert_eq!(quantile(&xs, 1.0), 3.0);
        assert!((quantile(&xs, 0.5) - 1.5).abs() < 1e-15);
    }
}
