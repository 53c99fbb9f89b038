//! Scoring detectors against ground truth.
//!
//! Two scores are used: a windowed F1 from greedy spike pairing, and the
//! spike-density error `ε` with its error impact `ε*`, which compare kernel
//! smoothed, height-weighted spike trains. The tuning and comparison harness
//! runs a grid search on a training corpus and then tabulates every method on
//! a test corpus.

mod density;
mod matching;
mod tune;

pub use density::{density_error, spike_density, DensityGrid, KernelDensity};
pub use matching::{greedy_pairs, match_f1, score_from_counts, MatchScore, MATCH_WINDOW};
pub use tune::{
    comparison_table, grid_search_tune, run_comparison, score_matrix, ComparisonRow,
    ComparisonTable, ParamGrid, TuningEntry, TuningLog, ALL_SCENARIOS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{DetectError, Spike};
use crate::series::HeartRateSeries;
use crate::simulate::SimulatedActivity;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("parameter grid for {0} is empty")]
    EmptyGrid(String),
    #[error("no activities to evaluate")]
    NoActivities,
    #[error("activity {index}: {source}")]
    Detect {
        index: usize,
        #[source]
        source: DetectError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// A recording with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCase {
    pub series: HeartRateSeries,
    pub truth: Vec<Spike>,
    pub scenario: String,
}

impl From<&SimulatedActivity> for EvalCase {
    fn from(a: &SimulatedActivity) -> Self {
        Self {
            series: a.series.clone(),
            truth: a.truth.clone(),
            scenario: a.scenario.scenario.name().to_string(),
        }
    }
}

impl EvalCase {
    /// Duration in seconds used for density normalisation.
    pub fn duration(&self) -> f64 {
        self.series.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// bpm/hour.
    pub epsilon: f64,
    /// bpm/hour.
    pub epsilon_star: f64,
}

/// Scores one detection against its ground truth.
pub fn score_activity(
    truth: &[Spike],
    detected: &[Spike],
    duration: f64,
    kernel: &KernelDensity,
) -> ActivityScore {
    let m = match_f1(truth, detected, MATCH_WINDOW);
    let (epsilon, epsilon_star) = density_error(truth, detected, duration, kernel);
    ActivityScore {
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        epsilon,
        epsilon_star,
    }
}

/// Per-activity scores and their means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub epsilon: f64,
    pub epsilon_star: f64,
    pub per_activity: Vec<ActivityScore>,
}

impl EvalReport {
    pub fn from_scores(per_activity: Vec<ActivityScore>) -> Result<Self> {
        if per_activity.is_empty() {
            return Err(EvalError::NoActivities);
        }
        let n = per_activity.len() as f64;
        let mean = |f: fn(&ActivityScore) -> f64| per_activity.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            precision: mean(|s| s.precision),
            recall: mean(|s| s.recall),
            f1: mean(|s| s.f1),
            epsilon: mean(|s| s.epsilon),
            epsilon_star: mean(|s| s.epsilon_star),
            per_activity,
        })
    }
}
