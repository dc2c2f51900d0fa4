use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result, bail};
use bvn_core::experiments::{
    Labeling, StudyPreset, StudyResult, StudySpec, run_study, simulate_graph, trial_graph_seed,
};
use bvn_core::graph::io::{GraphFormat, GroundTruth, read_graph, read_truth, write_graph, write_truth};
use bvn_core::graph::{AttributedGraph, FullColoring, ModelParams, StatsBundle, compute_stats};
use bvn_core::likelihood::{LatentPrior, PriorConfig};
use bvn_core::mcmc::{SamplerConfig, run_chain_on_stats};
use bvn_core::nomination::{
    FusionConfig, fusion_nominate, fusion_oracle_sweep, summarize, validate_grid,
};
use serde_json::{Value, json};

use crate::config::{FileConfig, pick};
use crate::{
    BaselineArgs, ChainArgs, GraphArgs, InferArgs, InputFormat, LabelingArg, ModelArgs,
    ReportFormat, SimulateArgs, StudyArgs, YPrior,
};

const DEFAULT_OUT: &str = "bvn-out";

/// Preset listing appended to `--help`.
pub fn presets_help() -> String {
    let mut text = String::from("Study presets (--preset):\n");
    for p in StudyPreset::ALL {
        text.push_str(&format!("  {:<11} {}\n", p.name(), p.description()));
    }
    text.push_str(
        "\nInference presets (bvn infer --preset):\n  default     1000 burn-in + 1000 samples\n  long        10000 burn-in + 10000 samples\n",
    );
    text
}

fn id_base(one_based: bool) -> usize {
    usize::from(one_based)
}

fn load_graph(args: &GraphArgs, file: &FileConfig) -> Result<(AttributedGraph, bool)> {
    let one_based = args.one_based || file.one_based.unwrap_or(false);
    let format = match args.input_format.or(file.input_format) {
        Some(InputFormat::Json) => GraphFormat::Json,
        Some(InputFormat::Matrix) => GraphFormat::Matrix,
        None => GraphFormat::from_path(&args.graph),
    };
    let graph = read_graph(&args.graph, format, one_based)
        .with_context(|| format!("reading graph {}", args.graph.display()))?;
    Ok((graph, one_based))
}

/// Prior from flags and file; `beta` defaults to `n - m'`.
fn resolve_prior(chain: &ChainArgs, file: &FileConfig, n: usize, m_obs: usize) -> Result<PriorConfig> {
    let default = PriorConfig::sparse_default(n, m_obs);
    let latent_prior = match chain.y_prior.or(file.y_prior).unwrap_or(YPrior::Bernoulli) {
        YPrior::Bernoulli => LatentPrior::Bernoulli,
        YPrior::Truncated => LatentPrior::Truncated,
    };
    let prior = PriorConfig {
        alpha: pick(chain.alpha, file.alpha, default.alpha),
        beta: pick(chain.beta, file.beta, default.beta),
        latent_prior,
    };
    prior.validate()?;
    Ok(prior)
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> bvn_core::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn labeling(model: &ModelArgs, file: &FileConfig) -> Labeling {
    match model.labeling.or(file.labeling).unwrap_or(LabelingArg::Random) {
        LabelingArg::Random => Labeling::Random,
        LabelingArg::Fixed => Labeling::Fixed,
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn infer(args: &InferArgs, out_text: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load(args.output.config.as_deref())?;
    let preset = args.preset.clone().or(file.preset.clone()).unwrap_or_else(|| "default".into());
    let seed = pick(args.output.seed, file.seed, 0);
    let base = match preset.as_str() {
        "default" => SamplerConfig { seed, ..SamplerConfig::default() },
        "long" => SamplerConfig::long(seed),
        other => bail!("unknown inference preset '{other}' (known: default, long)"),
    };
    let config = SamplerConfig {
        burn_in: pick(args.chain.burn_in, file.burn_in, base.burn_in),
        samples: pick(args.chain.samples, file.samples, base.samples),
        seed,
        record_traces: true,
    };
    config.validate()?;
    let format = pick(args.report.format, file.format, ReportFormat::Json);
    let out = pick(args.output.out.clone(), file.out.clone(), PathBuf::from(DEFAULT_OUT));

    let (graph, one_based) = load_graph(&args.graph, &file)?;
    let stats = compute_stats(&graph);
    let prior = resolve_prior(&args.chain, &file, stats.n, stats.m_observed())?;
    let trace = run_chain_on_stats(&stats, &prior, &config)?;
    let summary = summarize(&trace)?;
    let base_id = id_base(one_based);

    prepare_out(&out)?;
    let echoed = json!({
        "command": "infer",
        "graph": path_str(&args.graph.graph),
        "one_based": one_based,
        "preset": preset,
        "seed": seed,
        "burn_in": config.burn_in,
        "samples": config.samples,
        "alpha": prior.alpha,
        "beta": prior.beta,
        "y_prior": prior.latent_prior,
        "format": format,
        "out": path_str(&out),
    });
    write_json(&out.join("config.json"), &echoed)?;
    match format {
        ReportFormat::Json => write_json(&out.join("summary.json"), &summary.with_id_base(base_id))?,
        ReportFormat::Csv => {
            let path = out.join("summary.csv");
            let mut w = csv::Writer::from_writer(create(&path)?);
            w.write_record(["vertex", "marginal_red", "nominee"])?;
            for (id, p) in summary.latent_ids.iter().zip(&summary.marginal_red) {
                let flag = if *id == summary.nominee { "1" } else { "0" };
                w.write_record([(id + base_id).to_string(), p.to_string(), flag.to_string()])?;
            }
            w.flush().with_context(|| format!("writing {}", path.display()))?;
        }
    }
    write_with(&out.join("trace.csv"), |w| trace.write_csv(w))?;
    write_with(&out.join("marginals.csv"), |w| trace.write_marginals_csv(w, base_id))?;

    writeln!(out_text, "nominee: {} (posterior P(red) = {:.4})", summary.nominee + base_id, summary.nominee_prob)?;
    Ok(())
}

/// Model settings from a preset, overridden by flags and file values.
struct ModelSettings {
    n: usize,
    m: usize,
    m_obs: usize,
    params: ModelParams,
    preset: Option<StudyPreset>,
}

fn resolve_model(preset_name: Option<String>, model: &ModelArgs, file: &FileConfig) -> Result<ModelSettings> {
    let preset = preset_name.or(file.preset.clone()).map(|name| StudyPreset::from_name(&name)).transpose()?;
    let base = preset.map(|p| p.spec());
    let n = model.n.or(file.n).or(base.as_ref().map(|s| s.n));
    let m = model.m.or(file.m).or(base.as_ref().map(|s| s.m));
    let m_obs = model.mprime.or(file.mprime).or(base.as_ref().map(|s| s.m_obs));
    let p1 = model.p1.or(file.p1).or(base.as_ref().map(|s| s.params.p1()));
    let p2 = model.p2.or(file.p2).or(base.as_ref().map(|s| s.params.p2()));
    let q2 = model.q2.or(file.q2).or(base.as_ref().map(|s| s.params.q2()));
    let missing: Vec<&str> = [
        ("--n", n.is_none()),
        ("--m", m.is_none()),
        ("--mprime", m_obs.is_none()),
        ("--p1", p1.is_none()),
        ("--p2", p2.is_none()),
        ("--q2", q2.is_none()),
    ]
    .into_iter()
    .filter_map(|(name, absent)| absent.then_some(name))
    .collect();
    if !missing.is_empty() {
        bail!("without --preset these settings are required: {}", missing.join(", "));
    }
    let params = ModelParams::closure(p1.unwrap(), p2.unwrap(), q2.unwrap())?;
    Ok(ModelSettings { n: n.unwrap(), m: m.unwrap(), m_obs: m_obs.unwrap(), params, preset })
}

pub fn study(args: &StudyArgs, out_text: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load(args.output.config.as_deref())?;
    let model = resolve_model(args.preset.clone(), &args.model, &file)?;
    let base_sampler = model.preset.map(|p| p.spec().sampler).unwrap_or_default();
    let base_trials = model.preset.map(|p| p.spec().n_graphs).unwrap_or(1000);
    let sampler = SamplerConfig {
        burn_in: pick(args.chain.burn_in, file.burn_in, base_sampler.burn_in),
        samples: pick(args.chain.samples, file.samples, base_sampler.samples),
        seed: 0,
        record_traces: false,
    };
    let mut spec = StudySpec::new(
        model.n,
        model.m,
        model.m_obs,
        model.params,
        pick(args.trials, file.trials, base_trials),
        sampler,
    );
    spec.master_seed = pick(args.output.seed, file.seed, 0);
    spec.n_boot = pick(args.bootstrap, file.bootstrap, spec.n_boot);
    spec.labeling = labeling(&args.model, &file);
    let has_prior_override = args.chain.alpha.or(file.alpha).is_some()
        || args.chain.beta.or(file.beta).is_some()
        || args.chain.y_prior.or(file.y_prior).is_some();
    if has_prior_override {
        if model.m_obs > model.n {
            bail!("m' = {} exceeds n = {}", model.m_obs, model.n);
        }
        spec.prior = Some(resolve_prior(&args.chain, &file, model.n, model.m_obs)?);
    }
    spec.validate()?;
    let jobs = pick(args.jobs, file.jobs, 1);
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let format = pick(args.report.format, file.format, ReportFormat::Json);
    let out = pick(args.output.out.clone(), file.out.clone(), PathBuf::from(DEFAULT_OUT));

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let result = pool.install(|| run_study(&spec))?;

    prepare_out(&out)?;
    let echoed = json!({
        "command": "study",
        "preset": model.preset.map(|p| p.name()),
        "spec": spec,
        "prior": spec.effective_prior(),
        "jobs": jobs,
        "format": format,
        "out": path_str(&out),
    });
    write_json(&out.join("config.json"), &echoed)?;
    write_with(&out.join("trials.csv"), |w| result.write_trials_csv(w, 0))?;
    write_with(&out.join("threshold.csv"), |w| result.write_threshold_csv(w))?;
    match format {
        ReportFormat::Json => write_json(&out.join("summary.json"), &result.summary_json())?,
        ReportFormat::Csv => write_summary_csv(&out.join("summary.csv"), &result)?,
    }

    writeln!(
        out_text,
        "rate {:.4} (95% BCA CI {:.4}, {:.4}) over {} graphs; chance {:.4}",
        result.rate, result.ci.0, result.ci.1, spec.n_graphs, result.chance_rate
    )?;
    writeln!(
        out_text,
        "fusion baseline {:.4} at lambda {:.2} (95% BCA CI {:.4}, {:.4})",
        result.fusion.best_rate, result.fusion.best_lambda, result.fusion_ci.0, result.fusion_ci.1
    )?;
    Ok(())
}

fn write_summary_csv(path: &Path, result: &StudyResult) -> Result<()> {
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["metric", "value", "ci_lo", "ci_hi"])?;
    w.write_record(["rate", &result.rate.to_string(), &result.ci.0.to_string(), &result.ci.1.to_string()])?;
    w.write_record(["chance_rate", &result.chance_rate.to_string(), "", ""])?;
    w.write_record(["odds_ratio_vs_chance", &fmt(result.odds_ratio_vs_chance), "", ""])?;
    w.write_record([
        "fusion_rate",
        &result.fusion.best_rate.to_string(),
        &result.fusion_ci.0.to_string(),
        &result.fusion_ci.1.to_string(),
    ])?;
    w.write_record(["fusion_lambda", &result.fusion.best_lambda.to_string(), "", ""])?;
    w.write_record(["odds_ratio_vs_fusion", &fmt(result.odds_ratio_vs_fusion), "", ""])?;
    w.write_record(["graphs", &result.records.len().to_string(), "", ""])?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs, out_text: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load(args.output.config.as_deref())?;
    let model = resolve_model(args.preset.clone(), &args.model, &file)?;
    if model.m_obs < 2 {
        bail!("m' must be at least 2, got {}", model.m_obs);
    }
    if !(model.m_obs <= model.m && model.m <= model.n) {
        bail!("need m' <= m <= n, got n={}, m={}, m'={}", model.n, model.m, model.m_obs);
    }
    let count = pick(args.count, file.count, 1);
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let seed = pick(args.output.seed, file.seed, 0);
    let one_based = args.one_based || file.one_based.unwrap_or(false);
    let label = labeling(&args.model, &file);
    let out = pick(args.output.out.clone(), file.out.clone(), PathBuf::from(DEFAULT_OUT));

    prepare_out(&out)?;
    let echoed = json!({
        "command": "simulate",
        "preset": model.preset.map(|p| p.name()),
        "n": model.n,
        "m": model.m,
        "mprime": model.m_obs,
        "params": model.params,
        "count": count,
        "seed": seed,
        "labeling": label,
        "one_based": one_based,
        "out": path_str(&out),
    });
    write_json(&out.join("config.json"), &echoed)?;
    let width = count.saturating_sub(1).to_string().len().max(4);
    for i in 0..count {
        let (graph, truth) =
            simulate_graph(model.n, model.m, model.m_obs, &model.params, label, trial_graph_seed(seed, i))?;
        let stem = format!("graph_{i:0width$}");
        let graph_path = out.join(format!("{stem}.json"));
        write_graph(&graph_path, &graph, GraphFormat::Json, one_based)
            .with_context(|| format!("writing {}", graph_path.display()))?;
        let truth_path = out.join(format!("{stem}.truth.json"));
        let sidecar = GroundTruth { n: model.n, red: truth.red_vertices() };
        write_truth(&truth_path, &sidecar, one_based)
            .with_context(|| format!("writing {}", truth_path.display()))?;
    }
    writeln!(out_text, "wrote {count} graph(s) to {}", out.display())?;
    Ok(())
}

fn load_truth(path: &Path, graph: &AttributedGraph, one_based: bool) -> Result<FullColoring> {
    let truth = read_truth(path, one_based).with_context(|| format!("reading ground truth {}", path.display()))?;
    if truth.n != graph.n() {
        bail!("ground truth has n = {}, graph has n = {}", truth.n, graph.n());
    }
    let coloring = FullColoring::from_red(truth.n, &truth.red)?;
    if let Some(&v) = graph.observed_red().iter().find(|&&v| !coloring.color(v).is_red()) {
        bail!("ground truth marks observed red vertex {} as green", v + id_base(one_based));
    }
    Ok(coloring)
}

fn tau_rows(stats: &StatsBundle, tau: &[f64], base: usize) -> Vec<Value> {
    stats
        .latent_ids
        .iter()
        .zip(&stats.latent)
        .zip(tau)
        .map(|((id, vs), t)| json!({ "vertex": id + base, "r": vs.r, "s": vs.s, "tau": t }))
        .collect()
}

pub fn baseline(args: &BaselineArgs, out_text: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load(args.output.config.as_deref())?;
    let lambda = pick(args.lambda, file.lambda, FusionConfig::default().lambda);
    let grid = match (&args.grid_values, args.grid) {
        (Some(values), _) => Some(values.clone()),
        (None, true) => Some(FusionConfig::default_grid()),
        (None, false) => file.grid.clone(),
    };
    FusionConfig { lambda, sweep_grid: grid.clone() }.validate()?;
    if let Some(g) = &grid {
        validate_grid(g)?;
    }
    let truth_path = args.truth.clone().or(file.truth.clone());
    if grid.is_some() && truth_path.is_none() {
        bail!("a lambda sweep scores nominations against the true colours; pass --truth <sidecar>");
    }
    let format = pick(args.report.format, file.format, ReportFormat::Json);
    let out = pick(args.output.out.clone(), file.out.clone(), PathBuf::from(DEFAULT_OUT));
    let seed = pick(args.output.seed, file.seed, 0);

    let (graph, one_based) = load_graph(&args.graph, &file)?;
    let base = id_base(one_based);
    let stats = compute_stats(&graph);
    let nomination = fusion_nominate(&stats, lambda)?;
    let sweep = match (&grid, &truth_path) {
        (Some(g), Some(path)) => {
            let truth = load_truth(path, &graph, one_based)?;
            Some(fusion_oracle_sweep(&[(stats.clone(), truth)], g)?)
        }
        _ => None,
    };

    prepare_out(&out)?;
    let echoed = json!({
        "command": "baseline",
        "graph": path_str(&args.graph.graph),
        "one_based": one_based,
        "lambda": lambda,
        "grid": grid,
        "truth": truth_path.as_deref().map(path_str),
        "seed": seed,
        "format": format,
        "out": path_str(&out),
    });
    write_json(&out.join("config.json"), &echoed)?;
    let rows = tau_rows(&stats, &nomination.tau, base);
    match format {
        ReportFormat::Json => {
            let mut report = json!({
                "lambda": lambda,
                "nominee": nomination.nominee + base,
                "vertices": rows,
            });
            if let Some(s) = &sweep {
                report["sweep"] = json!({
                    "grid": s.grid,
                    "correct": s.rates,
                    "best_lambda": s.best_lambda,
                    "best_rate": s.best_rate,
                });
            }
            write_json(&out.join("baseline.json"), &report)?;
        }
        ReportFormat::Csv => {
            let path = out.join("baseline.csv");
            let mut w = csv::Writer::from_writer(create(&path)?);
            w.write_record(["vertex", "r", "s", "tau", "nominee"])?;
            for ((id, vs), t) in stats.latent_ids.iter().zip(&stats.latent).zip(&nomination.tau) {
                let flag = if *id == nomination.nominee { "1" } else { "0" };
                w.write_record([
                    (id + base).to_string(),
                    vs.r.to_string(),
                    vs.s.to_string(),
                    t.to_string(),
                    flag.to_string(),
                ])?;
            }
            w.flush().with_context(|| format!("writing {}", path.display()))?;
            if let Some(s) = &sweep {
                let path = out.join("sweep.csv");
                let mut w = csv::Writer::from_writer(create(&path)?);
                w.write_record(["lambda", "correct"])?;
                for (l, r) in s.grid.iter().zip(&s.rates) {
                    w.write_record([l.to_string(), r.to_string()])?;
                }
                w.flush().with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }

    writeln!(out_text, "{:>8} {:>4} {:>4} {:>10}", "vertex", "R", "S", "tau")?;
    for ((id, vs), t) in stats.latent_ids.iter().zip(&stats.latent).zip(&nomination.tau) {
        writeln!(out_text, "{:>8} {:>4} {:>4} {:>10.4}", id + base, vs.r, vs.s, t)?;
    }
    writeln!(out_text, "nominee: {} (lambda = {lambda})", nomination.nominee + base)?;
    if let Some(s) = &sweep {
        writeln!(out_text, "sweep: best lambda {} (correct = {})", s.best_lambda, s.best_rate)?;
    }
    Ok(())
}
