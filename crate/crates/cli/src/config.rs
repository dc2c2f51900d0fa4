//! Optional TOML configuration file. Every key mirrors a command-line flag
//! (with `-` spelled `_`); flags win over the file, the file over presets.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::{InputFormat, LabelingArg, ReportFormat, YPrior};

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
    pub preset: Option<String>,
    pub burn_in: Option<usize>,
    pub samples: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub y_prior: Option<YPrior>,
    pub one_based: Option<bool>,
    pub input_format: Option<InputFormat>,
    pub jobs: Option<usize>,
    pub trials: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub mprime: Option<usize>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub q2: Option<f64>,
    pub bootstrap: Option<usize>,
    pub labeling: Option<LabelingArg>,
    pub count: Option<usize>,
    pub lambda: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub truth: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("config file {}: {e}", path.display()))
    }
}

/// First of flag, file value, fallback.
pub fn pick<T>(flag: Option<T>, file: Option<T>, fallback: T) -> T {
    flag.or(file).unwrap_or(fallback)
}
