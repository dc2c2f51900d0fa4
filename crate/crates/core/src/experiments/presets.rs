use serde::{Deserialize, Serialize};

use super::StudySpec;
use crate::error::{Error, Result};
use crate::graph::ModelParams;
use crate::mcmc::SamplerConfig;

/// Named study settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StudyPreset {
    Toy12,
    Table3M8,
    Table3M32,
    EnronSim,
}

impl StudyPreset {
    pub const ALL: [StudyPreset; 4] =
        [StudyPreset::Toy12, StudyPreset::Table3M8, StudyPreset::Table3M32, StudyPreset::EnronSim];

    pub fn name(self) -> &'static str {
        match self {
            StudyPreset::Toy12 => "toy-12",
            StudyPreset::Table3M8 => "table3-m8",
            StudyPreset::Table3M32 => "table3-m32",
            StudyPreset::EnronSim => "enron-sim",
        }
    }

    /// One-line origin of the settings, for help text.
    pub fn description(self) -> &'static str {
        match self {
            StudyPreset::Toy12 => {
                "12-vertex toy study: m=5, m'=2, p1=0.25, p2=0.15, q2=0.25, 1000 graphs, 1000+1000 iterations"
            }
            StudyPreset::Table3M8 => {
                "fusion comparison, small m: n=184, m=8, m'=4 (2 or 6 via --mprime), p1=p2=0.2, q2=0.4, 1000 graphs"
            }
            StudyPreset::Table3M32 => {
                "fusion comparison, large m: n=184, m=32, m'=16 (8 or 24 via --mprime), p1=p2=0.2, q2=0.4, 1000 graphs"
            }
            StudyPreset::EnronSim => {
                "email-graph simulation: n=184, m=10, m'=5, p1=0.0168, p2=0.0111, q2=0.1298, 1000 graphs, 1000+1000 iterations"
            }
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
            Error::InvalidConfig(format!("unknown preset '{name}' (known: {})", known.join(", ")))
        })
    }

    pub fn spec(self) -> StudySpec {
        let cheap = SamplerConfig::default();
        let (n, m, m_obs, params) = match self {
            StudyPreset::Toy12 => (12, 5, 2, (0.25, 0.15, 0.25)),
            StudyPreset::Table3M8 => (184, 8, 4, (0.2, 0.2, 0.4)),
            StudyPreset::Table3M32 => (184, 32, 16, (0.2, 0.2, 0.4)),
            StudyPreset::EnronSim => (184, 10, 5, (0.0168, 0.0111, 0.1298)),
        };
        let params = ModelParams::new(params.0, params.1, params.2).expect("preset parameters are valid");
        StudySpec::new(n, m, m_obs, params, 1000, cheap)
    }
}
