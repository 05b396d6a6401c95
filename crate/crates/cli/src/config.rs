//! Optional TOML run configuration. Command-line flags override it.

use std::path::Path;

use pgm_forecast::hurdle::CompositionStrategy;
use pgm_forecast::panel::SyntheticConfig;
use pgm_forecast::scoring::{IgnBins, ScoringConfig};
use pgm_forecast::simulation::SimConfig;
use pgm_forecast::spatial::ClusterConfig;
use pgm_forecast::tuning::TuneConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<String>,
    pub synthetic: SyntheticConfig,
    pub tuning: TuneConfig,
    pub cluster: ClusterConfig,
    pub simulation: SimConfig,
    pub scoring: ScoringSection,
    pub composition: CompositionStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub mis_alpha: f64,
    pub ign_floor: f64,
    pub ign_edges: Vec<f64>,
}

impl Default for ScoringSection {
    fn default() -> Self {
        let d = ScoringConfig::default();
        Self {
            mis_alpha: d.mis_alpha,
            ign_floor: d.ign_floor,
            ign_edges: d.ign_bins.lower_edges().to_vec(),
        }
    }
}

impl ScoringSection {
    pub fn build(&self) -> Result<ScoringConfig, CliError> {
        if !(self.mis_alpha > 0.0 && self.mis_alpha < 1.0) {
            return Err(CliError::Config(format!(
                "scoring.mis_alpha must be in (0, 1), got {}",
                self.mis_alpha
            )));
        }
        Ok(ScoringConfig {
            mis_alpha: self.mis_alpha,
            ign_bins: IgnBins::new(self.ign_edges.clone()).map_err(pgm_forecast::Error::from)?,
            ign_floor: self.ign_floor,
        })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
