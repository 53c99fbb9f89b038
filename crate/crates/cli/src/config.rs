//! Run configuration read from `--config`.

use std::path::Path;

use hrspike::evaluate::{KernelDensity, ParamGrid};
use hrspike::{DetectorConfig, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferSettings {
    pub bin_edges: Vec<f64>,
    pub h_thresh: Vec<f64>,
    pub percentiles: Vec<f64>,
}

impl Default for InferSettings {
    fn default() -> Self {
        Self {
            bin_edges: hrspike::infer::default_bin_edges(),
            h_thresh: (0..=40).map(|i| 5.0 * i as f64).collect(),
            percentiles: (0..=20).map(|i| 80.0 + i as f64).collect(),
        }
    }
}

/// Every tunable setting; omitted sections and fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub simulation: ScenarioConfig,
    pub detector: DetectorConfig,
    pub grid: ParamGrid,
    pub kernel: KernelDensity,
    pub infer: InferSettings,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        config
            .simulation
            .validate()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Ok(config)
    }
}
