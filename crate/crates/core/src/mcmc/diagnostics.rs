use crate::error::{Error, Result};

/// Sample autocorrelation at lags `0..=max_lag`:
/// `r_k = sum_{t<N-k} (x_t - mean)(x_{t+k} - mean) / sum_t (x_t - mean)^2`.
///
/// A constant series has no defined correlation; every lag is `None`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<Option<f64>>> {
    if series.len() <= max_lag {
        return Err(Error::InvalidConfig(format!(
            "series of length {} is too short for lag {max_lag}",
            series.len()
        )));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = centered.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Ok(vec![None; max_lag + 1]);
    }
    Ok((0..=max_lag)
        .map(|k| {
            let num: f64 = centered.iter().zip(&centered[k..]).map(|(a, b)| a * b).sum();
            Some(num / denom)
        })
        .collect())
}
