//! Monte Carlo studies: simulate graphs with known colours, run the sampler
//! on each, and measure how often the nominee is a hidden red vertex.

mod bootstrap;
mod presets;

use std::fmt;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bootstrap::bca_ci;
pub use presets::StudyPreset;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, FullColoring, ModelParams, compute_stats, generate_graph};
use crate::likelihood::PriorConfig;
use crate::mcmc::{SamplerConfig, run_chain_on_stats};
use crate::nomination::{FusionConfig, FusionSweep, ParamMeans, fusion_nominate, summarize};

/// How red and observed vertices are placed among the ids of a simulated
/// graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labeling {
    /// A fresh random permutation per trial; the first `m` permuted ids are
    /// red and the first `m'` of those observed. Lowest-id tie-breaking then
    /// carries no information about colour.
    #[default]
    Random,
    /// Ids `0..m` red, `0..m'` observed.
    Fixed,
}

/// Everything that determines a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub n: usize,
    pub m: usize,
    pub m_obs: usize,
    pub params: ModelParams,
    pub n_graphs: usize,
    /// Iteration counts; the seed field is ignored, each trial derives its own.
    pub sampler: SamplerConfig,
    /// `None` uses `beta(2, n - m')` for psi.
    pub prior: Option<PriorConfig>,
    pub fusion_grid: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub n_boot: usize,
    pub level: f64,
    pub master_seed: u64,
    pub labeling: Labeling,
}

/// `0, 0.05, ..., 0.9`.
pub fn default_thresholds() -> Vec<f64> {
    (0..=18).map(|k| k as f64 / 20.0).collect()
}

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 10_000;

impl StudySpec {
    pub fn new(
        n: usize,
        m: usize,
        m_obs: usize,
        params: ModelParams,
        n_graphs: usize,
        sampler: SamplerConfig,
    ) -> Self {
        Self {
            n,
            m,
            m_obs,
            params,
            n_graphs,
            sampler,
            prior: None,
            fusion_grid: FusionConfig::default_grid(),
            thresholds: default_thresholds(),
            n_boot: DEFAULT_BOOTSTRAP_RESAMPLES,
            level: 0.95,
            master_seed: 0,
            labeling: Labeling::Random,
        }
    }

    pub fn effective_prior(&self) -> PriorConfig {
        self.prior.unwrap_or_else(|| PriorConfig::sparse_default(self.n, self.m_obs))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_obs < 2 {
            return Err(Error::InvalidConfig(format!("m' must be at least 2, got {}", self.m_obs)));
        }
        if self.m > self.n {
            return Err(Error::InvalidConfig(format!("m = {} exceeds n = {}", self.m, self.n)));
        }
        if self.m_obs >= self.m {
            return Err(Error::InvalidConfig(format!(
                "m' = {} leaves no latent red vertex to find (m = {})",
                self.m_obs, self.m
            )));
        }
        if self.n_graphs == 0 {
            return Err(Error::InvalidConfig("a study needs at least one graph".into()));
        }
        if !self.params.is_interior() {
            return Err(Error::InvalidParams(format!("{:?} is not inside the support", self.params)));
        }
        self.sampler.validate()?;
        self.effective_prior().validate()?;
        crate::nomination::validate_grid(&self.fusion_grid)?;
        if self.n_boot < 2 {
            return Err(Error::InvalidConfig("bootstrap needs at least two resamples".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig(format!("level {} is not in (0, 1)", self.level)));
        }
        if self.thresholds.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("thresholds must be finite".into()));
        }
        Ok(())
    }
}

/// SplitMix64 output function.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `master`, independent of evaluation order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(master ^ mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

const GRAPH_STREAM: u64 = 0;
const CHAIN_STREAM: u64 = 1;
const BOOTSTRAP_STREAM: u64 = u64::MAX;

/// Outcome of one simulated graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub nominee: usize,
    pub nominee_prob: f64,
    pub correct: bool,
    pub param_means: ParamMeans,
    /// Whether the fusion nominee was red, per fusion grid point.
    pub fusion_correct: Vec<bool>,
}

/// Draw one graph with known colours. With [`Labeling::Random`] the red and
/// observed ids come from a random permutation drawn from the same stream.
pub fn simulate_graph(
    n: usize,
    m: usize,
    m_obs: usize,
    params: &ModelParams,
    labeling: Labeling,
    seed: u64,
) -> Result<(AttributedGraph, FullColoring)> {
    if !(m_obs <= m && m <= n) {
        return Err(Error::InvalidConfig(format!("need m' <= m <= n, got n={n}, m={m}, m'={m_obs}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (red, mut observed): (Vec<usize>, Vec<usize>) = match labeling {
        Labeling::Fixed => ((0..m).collect(), (0..m_obs).collect()),
        Labeling::Random => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            (perm[..m].to_vec(), perm[..m_obs].to_vec())
        }
    };
    observed.sort_unstable();
    let truth = FullColoring::from_red(n, &red)?;
    let graph = generate_graph(n, &truth, &observed, params, &mut rng)?;
    Ok((graph, truth))
}

/// Seed of the graph stream of trial `trial`; [`simulate_graph`] with this
/// seed reproduces the trial's graph.
pub fn trial_graph_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(derive_seed(master_seed, trial as u64), GRAPH_STREAM)
}

/// Simulate and analyse trial `trial` of `spec`.
pub fn run_trial(spec: &StudySpec, trial: usize) -> Result<TrialRecord> {
    let trial_seed = derive_seed(spec.master_seed, trial as u64);
    let (graph, truth) = simulate_graph(
        spec.n,
        spec.m,
        spec.m_obs,
        &spec.params,
        spec.labeling,
        trial_graph_seed(spec.master_seed, trial),
    )?;
    let stats = compute_stats(&graph);
    let sampler = SamplerConfig {
        seed: derive_seed(trial_seed, CHAIN_STREAM),
        record_traces: false,
        ..spec.sampler
    };
    let trace = run_chain_on_stats(&stats, &spec.effective_prior(), &sampler)?;
    let summary = summarize(&trace)?;
    let fusion_correct = spec
        .fusion_grid
        .iter()
        .map(|&l| Ok(truth.color(fusion_nominate(&stats, l)?.nominee).is_red()))
        .collect::<Result<_>>()?;
    Ok(TrialRecord {
        trial,
        nominee: summary.nominee,
        nominee_prob: summary.nominee_prob,
        correct: truth.color(summary.nominee).is_red(),
        param_means: summary.param_means,
        fusion_correct,
    })
}

/// Probability that a uniformly chosen latent vertex is red.
pub fn chance_rate(n: usize, m: usize, m_obs: usize) -> Result<f64> {
    if !(m_obs < m && m <= n) {
        return Err(Error::InvalidConfig(format!("need m' < m <= n, got n={n}, m={m}, m'={m_obs}")));
    }
    Ok((m - m_obs) as f64 / (n - m_obs) as f64)
}

/// `(a / (1 - a)) / (b / (1 - b))`; `None` when either rate is 0 or 1.
pub fn odds_ratio(a: f64, b: f64) -> Option<f64> {
    let inside = |p: f64| p > 0.0 && p < 1.0;
    (inside(a) && inside(b)).then(|| (a / (1.0 - a)) / (b / (1.0 - b)))
}

/// Success rate among trials whose nominee probability exceeds `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    /// `None` when no trial qualifies.
    pub rate: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub n_support: usize,
}

fn flags(records: &[&TrialRecord]) -> Vec<f64> {
    records.iter().map(|r| f64::from(u8::from(r.correct))).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bootstrap stream for a threshold; the aggregate interval uses the
/// stream of threshold 0, so the two coincide.
fn threshold_rng(seed: u64, threshold: f64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, threshold.max(0.0).to_bits()))
}

/// Conditional success rate for each threshold `p`: trials with
/// `nominee_prob > p`, every trial when `p <= 0`.
pub fn threshold_curve(
    records: &[TrialRecord],
    thresholds: &[f64],
    level: f64,
    n_boot: usize,
    seed: u64,
) -> Result<Vec<ThresholdPoint>> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("threshold curve needs at least one trial".into()));
    }
    thresholds
        .iter()
        .map(|&p| {
            let kept: Vec<&TrialRecord> =
                records.iter().filter(|r| p <= 0.0 || r.nominee_prob > p).collect();
            if kept.is_empty() {
                return Ok(ThresholdPoint { threshold: p, rate: None, ci: None, n_support: 0 });
            }
            let xs = flags(&kept);
            let ci = bca_ci(&xs, level, n_boot, &mut threshold_rng(seed, p))?;
            Ok(ThresholdPoint { threshold: p, rate: Some(mean(&xs)), ci: Some(ci), n_support: kept.len() })
        })
        .collect()
}

/// Aggregated study outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub spec: StudySpec,
    pub records: Vec<TrialRecord>,
    pub rate: f64,
    pub ci: (f64, f64),
    pub threshold_curve: Vec<ThresholdPoint>,
    pub chance_rate: f64,
    pub odds_ratio_vs_chance: Option<f64>,
    /// Oracle-tuned fusion baseline over `spec.fusion_grid`.
    pub fusion: FusionSweep,
    pub fusion_ci: (f64, f64),
    pub odds_ratio_vs_fusion: Option<f64>,
}

impl StudyResult {
    /// Aggregate trial records (any subset of a study's trials).
    pub fn from_records(spec: &StudySpec, records: Vec<TrialRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidConfig("no trial records".into()));
        }
        let boot_seed = derive_seed(spec.master_seed, BOOTSTRAP_STREAM);
        let all: Vec<&TrialRecord> = records.iter().collect();
        let xs = flags(&all);
        let rate = mean(&xs);
        let ci = bca_ci(&xs, spec.level, spec.n_boot, &mut threshold_rng(boot_seed, 0.0))?;
        let curve = threshold_curve(&records, &spec.thresholds, spec.level, spec.n_boot, boot_seed)?;
        let chance = chance_rate(spec.n, spec.m, spec.m_obs)?;

        let grid = spec.fusion_grid.clone();
        let mut rates = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let hits = records.iter().filter(|r| r.fusion_correct[k]).count();
            rates.push(hits as f64 / records.len() as f64);
        }
        let mut best = 0;
        for (k, &r) in rates.iter().enumerate() {
            if r > rates[best] {
                best = k;
            }
        }
        let fusion_xs: Vec<f64> =
            records.iter().map(|r| f64::from(u8::from(r.fusion_correct[best]))).collect();
        let fusion_ci = bca_ci(
            &fusion_xs,
            spec.level,
            spec.n_boot,
            &mut ChaCha8Rng::seed_from_u64(derive_seed(boot_seed, BOOTSTRAP_STREAM)),
        )?;
        let fusion = FusionSweep { best_lambda: grid[best], best_rate: rates[best], grid, rates };
        Ok(Self {
            spec: spec.clone(),
            odds_ratio_vs_chance: odds_ratio(rate, chance),
            odds_ratio_vs_fusion: odds_ratio(rate, fusion.best_rate),
            rate,
            ci,
            threshold_curve: curve,
            chance_rate: chance,
            fusion,
            fusion_ci,
            records,
        })
    }

    /// Aggregate over the first `k` trials only.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        Self::from_records(&self.spec, self.records[..k.min(self.records.len())].to_vec())
    }

    /// One row per trial. Vertex ids are offset by `id_base`.
    pub fn write_trials_csv<W: Write>(&self, out: W, id_base: usize) -> Result<()> {
        let best = self.fusion.grid.iter().position(|&l| l == self.fusion.best_lambda).unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "trial",
            "nominee",
            "nominee_prob",
            "correct",
            "p1_mean",
            "p2_mean",
            "q2_mean",
            "psi_mean",
            "fusion_correct_best",
        ])
        .map_err(csv_error)?;
        for r in &self.records {
            let pm = r.param_means;
            w.write_record([
                r.trial.to_string(),
                (r.nominee + id_base).to_string(),
                r.nominee_prob.to_string(),
                u8::from(r.correct).to_string(),
                pm.p1.to_string(),
                pm.p2.to_string(),
                pm.q2.to_string(),
                pm.psi.to_string(),
                u8::from(r.fusion_correct[best]).to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns `threshold,rate,ci_lo,ci_hi,n_support`; empty cells where no
    /// trial qualifies.
    pub fn write_threshold_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold", "rate", "ci_lo", "ci_hi", "n_support"]).map_err(csv_error)?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for p in &self.threshold_curve {
            w.write_record([
                p.threshold.to_string(),
                opt(p.rate),
                opt(p.ci.map(|c| c.0)),
                opt(p.ci.map(|c| c.1)),
                p.n_support.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aggregates without the per-trial records.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec,
            "n_trials": self.records.len(),
            "rate": self.rate,
            "ci": [self.ci.0, self.ci.1],
            "chance_rate": self.chance_rate,
            "odds_ratio_vs_chance": self.odds_ratio_vs_chance,
            "fusion": self.fusion,
            "fusion_ci": [self.fusion_ci.0, self.fusion_ci.1],
            "odds_ratio_vs_fusion": self.odds_ratio_vs_fusion,
            "threshold_curve": self.threshold_curve,
        })
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidConfig(format!("csv: {other:?}")),
    }
}

/// Run every trial (in parallel on the current rayon pool) and aggregate.
/// Results do not depend on the number of threads.
pub fn run_study(spec: &StudySpec) -> Result<StudyResult> {
    spec.validate()?;
    let done = AtomicUsize::new(0);
    let step = (spec.n_graphs / 10).max(1);
    let records = (0..spec.n_graphs)
        .into_par_iter()
        .map(|t| {
            let rec = run_trial(spec, t);
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if k % step == 0 {
                log::info!("{k}/{} trials done", spec.n_graphs);
            }
            rec
        })
        .collect::<Result<Vec<_>>>()?;
    StudyResult::from_records(spec, records)
}

/// One column of a method comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonColumn {
    pub m: usize,
    pub m_obs: usize,
    pub bvn_rate: f64,
    pub bvn_ci: (f64, f64),
    pub fusion_rate: f64,
    pub fusion_lambda: f64,
    pub fusion_ci: (f64, f64),
    pub odds_ratio: Option<f64>,
}

/// Posterior nomination against the oracle-tuned fusion baseline, one
/// column per study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<ComparisonColumn>,
}

impl ComparisonTable {
    pub fn from_results(results: &[StudyResult]) -> Self {
        let columns = results
            .iter()
            .map(|r| ComparisonColumn {
                m: r.spec.m,
                m_obs: r.spec.m_obs,
                bvn_rate: r.rate,
                bvn_ci: r.ci,
                fusion_rate: r.fusion.best_rate,
                fusion_lambda: r.fusion.best_lambda,
                fusion_ci: r.fusion_ci,
                odds_ratio: r.odds_ratio_vs_fusion,
            })
            .collect();
        Self { columns }
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const W: usize = 22;
        write!(f, "{:<8}", "")?;
        for c in &self.columns {
            write!(f, "{:>W$}", format!("m={} m'={}", c.m, c.m_obs))?;
        }
        writeln!(f)?;
        write!(f, "{:<8}", "BVN")?;
        for c in &self.columns {
            write!(f, "{:>W$}", format!("{:.3} ({:.3}, {:.3})", c.bvn_rate, c.bvn_ci.0, c.bvn_ci.1))?;
        }
        writeln!(f)?;
        write!(f, "{:<8}", "fusion")?;
        for c in &self.columns {
            write!(f, "{:>W$}", format!("{:.3} (l={:.2})", c.fusion_rate, c.fusion_lambda))?;
        }
        writeln!(f)?;
        write!(f, "{:<8}", "OR")?;
        for c in &self.columns {
            let or = c.odds_ratio.map_or_else(|| "undefined".to_string(), |v| format!("{v:.3}"));
            write!(f, "{or:>W$}")?;
        }
        writeln!(f)
    }
}

/// Run each study in turn and tabulate.
pub fn comparison_table(specs: &[StudySpec]) -> Result<ComparisonTable> {
    let results = specs.iter().map(run_study).collect::<Result<Vec<_>>>()?;
    Ok(ComparisonTable::from_results(&results))
}
