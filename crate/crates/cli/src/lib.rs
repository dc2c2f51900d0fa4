//! The `bvn` command-line interface as a library, so the commands can be
//! driven in-process.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Json,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YPrior {
    /// Independent Bernoulli(psi) colours.
    Bernoulli,
    /// Colour prior truncated to at least one latent red (not implemented).
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelingArg {
    /// Red and observed ids drawn by a random permutation per graph.
    Random,
    /// Ids 0..m red, 0..m' observed.
    Fixed,
}

#[derive(Parser)]
#[command(name = "bvn", version, about = "Bayesian vertex nomination on attributed graphs")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the sampler on one graph and nominate the most probable red vertex.
    #[command(allow_negative_numbers = true)]
    Infer(InferArgs),
    /// Simulate many graphs, nominate on each, and report success rates.
    #[command(allow_negative_numbers = true)]
    Study(StudyArgs),
    /// Write simulated graphs with ground-truth colourings in sidecar files.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Nominate with the linear fusion statistic (1 - lambda) R + lambda S.
    #[command(allow_negative_numbers = true)]
    Baseline(BaselineArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Random seed; fixes every output byte.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: bvn-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults for any of the flags (keys use `_`).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Format of the summary report [default: json].
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    /// Iterations discarded before summarising.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Iterations kept for the posterior summary.
    #[arg(long)]
    pub samples: Option<usize>,
    /// psi ~ beta(alpha, beta) [default: 2].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// psi ~ beta(alpha, beta) [default: n - m'].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Prior on the latent colours [default: bernoulli].
    #[arg(long, value_enum)]
    pub y_prior: Option<YPrior>,
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Graph file: JSON (`.json`) or upper-triangular matrix text.
    pub graph: PathBuf,
    /// Override format detection by file extension.
    #[arg(long, value_enum)]
    pub input_format: Option<InputFormat>,
    /// Vertex ids in files and reports start at 1.
    #[arg(long)]
    pub one_based: bool,
}

#[derive(Args, Debug, Clone)]
pub struct InferArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Iteration preset: `default` (1000 + 1000) or `long` (10000 + 10000).
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Number of vertices.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of red vertices.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of observed red vertices.
    #[arg(long)]
    pub mprime: Option<usize>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    #[arg(long)]
    pub q2: Option<f64>,
    /// Placement of red and observed ids [default: random].
    #[arg(long, value_enum)]
    pub labeling: Option<LabelingArg>,
}

#[derive(Args, Debug, Clone)]
pub struct StudyArgs {
    /// Study preset (see `bvn study --help`).
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of simulated graphs.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads; results do not depend on it [default: 1].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Bootstrap resamples for confidence intervals [default: 10000].
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Take n, m, m' and parameters from a study preset.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of graphs [default: 1].
    #[arg(long)]
    pub count: Option<usize>,
    /// Write 1-based vertex ids.
    #[arg(long)]
    pub one_based: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Fusion weight in [0, 1] [default: 0.5].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Sweep the default weight grid 0, 0.05, ..., 1 (needs --truth).
    #[arg(long)]
    pub grid: bool,
    /// Sweep these weights (comma separated; needs --truth).
    #[arg(long, value_delimiter = ',')]
    pub grid_values: Option<Vec<f64>>,
    /// Ground-truth sidecar written by `bvn simulate`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

/// 1 for invalid input or configuration, 2 when reading or writing files
/// failed.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(bvn_core::Error::Io(_)) = cause.downcast_ref::<bvn_core::Error>() {
            return 2;
        }
    }
    1
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Command output goes to `out`; diagnostics go to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let help = commands::presets_help();
    let mut cmd = Cli::command().after_long_help(help.clone());
    cmd = cmd.mut_subcommand("study", |c| c.after_long_help(help.clone()));
    cmd = cmd.mut_subcommand("simulate", |c| c.after_long_help(help));
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    // a second run in the same process keeps the first logger
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();

    let result = match cli.command {
        Command::Infer(args) => commands::infer(&args, out),
        Command::Study(args) => commands::study(&args, out),
        Command::Simulate(args) => commands::simulate(&args, out),
        Command::Baseline(args) => commands::baseline(&args, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
