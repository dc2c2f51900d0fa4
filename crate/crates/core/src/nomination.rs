//! Nomination from chain output, and the linear fusion baseline
//! `tau(v) = (1 - lambda) R(v) + lambda S(v)`.

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{FullColoring, StatsBundle};
use crate::mcmc::ChainTrace;

/// Posterior means over the retained iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamMeans {
    pub p1: f64,
    pub p2: f64,
    pub q2: f64,
    pub psi: f64,
}

/// Per-vertex red probabilities and the resulting nomination.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Latent vertex ids, ascending.
    pub latent_ids: Vec<usize>,
    /// `marginal_red[i]` belongs to `latent_ids[i]`.
    pub marginal_red: Vec<f64>,
    pub param_means: ParamMeans,
    pub nominee: usize,
    pub nominee_prob: f64,
}

impl PosteriorSummary {
    pub fn marginal_of(&self, id: usize) -> Option<f64> {
        let i = self.latent_ids.binary_search(&id).ok()?;
        Some(self.marginal_red[i])
    }

    /// View that serialises ids shifted by `id_base`.
    pub fn with_id_base(&self, id_base: usize) -> SummaryJson<'_> {
        SummaryJson { summary: self, id_base }
    }
}

/// JSON form `{"nominee", "nominee_prob", "marginals": {id: prob}, "param_means"}`
/// with marginals in ascending id order.
pub struct SummaryJson<'a> {
    summary: &'a PosteriorSummary,
    id_base: usize,
}

struct Marginals<'a>(&'a PosteriorSummary, usize);

impl Serialize for Marginals<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.latent_ids.len()))?;
        for (id, p) in self.0.latent_ids.iter().zip(&self.0.marginal_red) {
            map.serialize_entry(&(id + self.1).to_string(), p)?;
        }
        map.end()
    }
}

impl Serialize for SummaryJson<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let s = self.summary;
        let mut st = serializer.serialize_struct("PosteriorSummary", 4)?;
        st.serialize_field("nominee", &(s.nominee + self.id_base))?;
        st.serialize_field("nominee_prob", &s.nominee_prob)?;
        st.serialize_field("marginals", &Marginals(s, self.id_base))?;
        st.serialize_field("param_means", &s.param_means)?;
        st.end()
    }
}

/// Index of the largest value; the first one wins ties.
fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Marginals and parameter means over the retained iterations; nominee is
/// the most probable latent vertex, lowest id on ties.
pub fn summarize(trace: &ChainTrace) -> Result<PosteriorSummary> {
    let marginal_red = trace.marginal_red()?;
    let [p1, p2, q2, psi] = trace.param_means()?;
    let best = argmax_first(&marginal_red)
        .ok_or_else(|| Error::EmptyTrace("trace has no latent vertices".into()))?;
    Ok(PosteriorSummary {
        latent_ids: trace.latent_ids().to_vec(),
        nominee: trace.latent_ids()[best],
        nominee_prob: marginal_red[best],
        marginal_red,
        param_means: ParamMeans { p1, p2, q2, psi },
    })
}

/// Fusion weight and an optional grid of weights to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub lambda: f64,
    pub sweep_grid: Option<Vec<f64>>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { lambda: 0.5, sweep_grid: None }
    }
}

impl FusionConfig {
    /// `0, 0.05, ..., 1`.
    pub fn default_grid() -> Vec<f64> {
        (0..=20).map(|k| k as f64 / 20.0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if let Some(grid) = &self.sweep_grid {
            validate_grid(grid)?;
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!("fusion weight lambda = {lambda} is not in [0, 1]")));
    }
    Ok(())
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("fusion grid is empty".into()));
    }
    grid.iter().try_for_each(|&l| check_lambda(l))
}

/// Fusion nominee and the `tau` value of every latent vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionNomination {
    pub lambda: f64,
    pub nominee: usize,
    /// Parallel to `StatsBundle::latent_ids`.
    pub tau: Vec<f64>,
}

/// Latent vertex maximising `(1 - lambda) R + lambda S`, lowest id on ties.
pub fn fusion_nominate(stats: &StatsBundle, lambda: f64) -> Result<FusionNomination> {
    check_lambda(lambda)?;
    let tau: Vec<f64> = stats
        .latent
        .iter()
        .map(|t| (1.0 - lambda) * t.r as f64 + lambda * t.s as f64)
        .collect();
    let best = argmax_first(&tau)
        .ok_or_else(|| Error::InvalidGraph("graph has no latent vertices".into()))?;
    Ok(FusionNomination { lambda, nominee: stats.latent_ids[best], tau })
}

/// Correct-nomination rate of the fusion statistic at every grid weight,
/// and the best of them (first grid point on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSweep {
    pub grid: Vec<f64>,
    pub rates: Vec<f64>,
    pub best_lambda: f64,
    pub best_rate: f64,
}

/// Evaluate the fusion nominee on every graph at every grid weight against
/// the true colourings. The maximum over the grid is an oracle-tuned rate.
pub fn fusion_oracle_sweep(
    graphs: &[(StatsBundle, FullColoring)],
    grid: &[f64],
) -> Result<FusionSweep> {
    validate_grid(grid)?;
    if graphs.is_empty() {
        return Err(Error::InvalidConfig("no graphs to evaluate".into()));
    }
    let mut hits = vec![0usize; grid.len()];
    for (stats, truth) in graphs {
        for (h, &lambda) in hits.iter_mut().zip(grid) {
            let nominee = fusion_nominate(stats, lambda)?.nominee;
            *h += usize::from(truth.color(nominee).is_red());
        }
    }
    let rates: Vec<f64> = hits.iter().map(|&h| h as f64 / graphs.len() as f64).collect();
    let best = argmax_first(&rates).expect("grid is non-empty");
    Ok(FusionSweep {
        grid: grid.to_vec(),
        best_lambda: grid[best],
        best_rate: rates[best],
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::io::{TABLE1_MATRIX, read_matrix_str};
    use crate::graph::{Color, ModelParams, compute_stats};
    use crate::mcmc::{ChainState, SamplerConfig};

    fn trace_from(rows: &[Vec<bool>]) -> ChainTrace {
        let config = SamplerConfig { burn_in: 0, samples: rows.len(), seed: 0, record_traces: false };
        let ids: Vec<usize> = (2..2 + rows[0].len()).collect();
        let mut t = ChainTrace::new(ids, &config);
        for row in rows {
            let y = row.iter().map(|&r| if r { Color::Red } else { Color::Green }).collect();
            let params = ModelParams::new(0.2, 0.1, 0.3).unwrap();
            t.record(&ChainState::new(y, params, 0.25, 2).unwrap(), [false; 3]);
        }
        t
    }

    #[test]
    fn always_red_vertex() {
        let rows = vec![vec![false, true, false]; 5];
        let s = summarize(&trace_from(&rows)).unwrap();
        assert_eq!(s.marginal_of(3), Some(1.0));
        assert_eq!(s.nominee, 3);
        assert_eq!(s.nominee_prob, 1.0);
        assert_eq!(s.param_means.psi, 0.25);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let rows = vec![vec![false, true, true], vec![true, true, true], vec![false, false, false]];
        let s = summarize(&trace_from(&rows)).unwrap();
        assert_eq!(s.marginal_red[1], s.marginal_red[2]);
        assert_eq!(s.nominee, 3);
    }

    #[test]
    fn empty_trace_rejected() {
        let config = SamplerConfig { burn_in: 3, samples: 1, seed: 0, record_traces: false };
        assert!(summarize(&ChainTrace::new(vec![2, 3], &config)).is_err());
    }

    #[test]
    fn json_shape() {
        let rows = vec![vec![true, false]];
        let s = summarize(&trace_from(&rows)).unwrap();
        let v = serde_json::to_value(s.with_id_base(1)).unwrap();
        assert_eq!(v["nominee"], 3);
        assert_eq!(v["marginals"]["3"], 1.0);
        assert_eq!(v["marginals"]["4"], 0.0);
        assert_eq!(v["param_means"]["p1"], 0.2);
    }

    #[test]
    fn table1_fusion() {
        let stats = compute_stats(&read_matrix_str(TABLE1_MATRIX, true).unwrap());
        let f = fusion_nominate(&stats, 0.5).unwrap();
        // 0-based vertex 2 is vertex 3 in the table: R = 1, S = 4
        assert_eq!(f.nominee, 2);
        let mut tau = f.tau.clone();
        tau.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(&tau[..2], &[2.5, 1.5]);
        assert!(fusion_nominate(&stats, 1.5).is_err());
    }

    #[test]
    fn fusion_endpoints_and_shift() {
        let stats = compute_stats(&read_matrix_str(TABLE1_MATRIX, true).unwrap());
        let by = |key: fn(&crate::graph::VertexStats) -> usize| {
            let best = stats.latent.iter().map(key).max().unwrap();
            stats.latent_ids[stats.latent.iter().position(|t| key(t) == best).unwrap()]
        };
        assert_eq!(fusion_nominate(&stats, 0.0).unwrap().nominee, by(|t| t.r));
        assert_eq!(fusion_nominate(&stats, 1.0).unwrap().nominee, by(|t| t.s));
        let mut shifted = stats.clone();
        for t in &mut shifted.latent {
            t.s += 7;
        }
        for lambda in FusionConfig::default_grid() {
            let a = fusion_nominate(&stats, lambda).unwrap();
            let b = fusion_nominate(&shifted, lambda).unwrap();
            assert_eq!(a.nominee, b.nominee);
            for (x, y) in a.tau.iter().zip(&b.tau) {
                assert!((y - x - 7.0 * lambda).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sweep_best_dominates() {
        let stats = compute_stats(&read_matrix_str(TABLE1_MATRIX, true).unwrap());
        let truth = FullColoring::from_red(12, &[0, 1, 2, 3, 4]).unwrap();
        let graphs = vec![(stats, truth)];
        let single = fusion_oracle_sweep(&graphs, &[0.5]).unwrap();
        assert_eq!(single.rates, vec![1.0]);
        let sweep = fusion_oracle_sweep(&graphs, &FusionConfig::default_grid()).unwrap();
        assert_eq!(sweep.grid.len(), 21);
        assert!(sweep.rates.iter().all(|&r| r <= sweep.best_rate));
        assert!(fusion_oracle_sweep(&graphs, &[]).is_err());
    }
}
