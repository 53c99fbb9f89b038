use serde::{Deserialize, Serialize};

use crate::config::Config;

/// One simulated activity of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEntry {
    pub name: String,
    pub scenario: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spike_seed: Option<u64>,
}

/// Written beside every command's outputs. Output paths are relative to the
/// output directory so reruns elsewhere produce the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: Config,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Seconds since the epoch from `SOURCE_DATE_EPOCH`, if set.
    pub timestamp: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activities: Vec<ActivityEntry>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: &Config) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|v| v.trim().parse().ok()),
            method: None,
            activities: Vec::new(),
        }
    }
}
