use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    score_activity, ActivityScore, EvalCase, EvalError, EvalReport, KernelDensity, Result,
};
use crate::detect::{detect_spikes, DetectorConfig, Method};

/// Values tried by the grid search. Each method varies only the axes it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamGrid {
    pub smoothing_widths: Vec<usize>,
    pub multipliers: Vec<f64>,
    pub adaptive_windows: Vec<usize>,
    pub dwt_multipliers: Vec<f64>,
    pub cwt_scales: Vec<f64>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            smoothing_widths: vec![50, 100, 200, 400],
            multipliers: vec![1.5, 2.0, 2.5, 3.0, 4.0],
            adaptive_windows: vec![100, 200, 400],
            dwt_multipliers: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            cwt_scales: vec![10.0, 20.0, 40.0],
        }
    }
}

impl ParamGrid {
    /// A grid holding exactly the values of `config`.
    pub fn single(config: &DetectorConfig) -> Self {
        Self {
            smoothing_widths: vec![config.smoothing_width],
            multipliers: vec![config.threshold_multiplier],
            adaptive_windows: vec![config.adaptive_window],
            dwt_multipliers: vec![config.dwt_multiplier],
            cwt_scales: vec![config.cwt_scale],
        }
    }

    /// Every grid point for `method`, with unvaried fields taken from `base`.
    pub fn configs(&self, method: Method, base: &DetectorConfig) -> Vec<DetectorConfig> {
        let base = DetectorConfig {
            method,
            ..base.clone()
        };
        let mut configs = vec![base];
        let mut expand = |f: &dyn Fn(&DetectorConfig) -> Vec<DetectorConfig>| {
            configs = configs.iter().flat_map(f).collect();
        };
        match method {
            Method::MovConstant | Method::MovAdaptive => expand(&|c| {
                self.smoothing_widths
                    .iter()
                    .map(|&w| DetectorConfig {
                        smoothing_width: w,
                        ..c.clone()
                    })
                    .collect()
            }),
            Method::DwtConstant | Method::DwtAdaptive => expand(&|c| {
                self.dwt_multipliers
                    .iter()
                    .map(|&m| DetectorConfig {
                        dwt_multiplier: m,
                        ..c.clone()
                    })
                    .collect()
            }),
            Method::CwtConstant | Method::CwtAdaptive => expand(&|c| {
                self.cwt_scales
                    .iter()
                    .map(|&a| DetectorConfig {
                        cwt_scale: a,
                        ..c.clone()
                    })
                    .collect()
            }),
        }
        expand(&|c| {
            self.multipliers
                .iter()
                .map(|&m| DetectorConfig {
                    threshold_multiplier: m,
                    ..c.clone()
                })
                .collect()
        });
        if method.is_adaptive() {
            expand(&|c| {
                self.adaptive_windows
                    .iter()
                    .map(|&w| DetectorConfig {
                        adaptive_window: w,
                        ..c.clone()
                    })
                    .collect()
            });
        }
        configs
    }
}

/// Scores every config on every case. Work is spread over all
/// (config, activity) pairs; results come back in input order.
pub fn score_matrix(
    configs: &[DetectorConfig],
    cases: &[EvalCase],
    kernel: &KernelDensity,
) -> Result<Vec<Vec<ActivityScore>>> {
    if cases.is_empty() {
        return Err(EvalError::NoActivities);
    }
    let flat: Vec<ActivityScore> = (0..configs.len() * cases.len())
        .into_par_iter()
        .map(|k| {
            let (c, a) = (k / cases.len(), k % cases.len());
            let case = &cases[a];
            let detected = detect_spikes(&case.series, &configs[c])
                .map_err(|source| EvalError::Detect { index: a, source })?;
            Ok(score_activity(
                &case.truth,
                &detected,
                case.duration(),
                kernel,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(flat
        .chunks(cases.len())
        .map(<[ActivityScore]>::to_vec)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningEntry {
    pub method: Method,
    pub config: DetectorConfig,
    pub mean_f1: f64,
    pub mean_epsilon_star: f64,
}

/// Full score table of a grid search plus the winner per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningLog {
    pub n_activities: usize,
    pub entries: Vec<TuningEntry>,
    pub best: Vec<TuningEntry>,
}

impl TuningLog {
    pub fn best_config(&self, method: Method) -> Option<&DetectorConfig> {
        self.best
            .iter()
            .find(|e| e.method == method)
            .map(|e| &e.config)
    }
}

/// Picks, per method, the grid point with the highest mean F1, breaking ties
/// by higher mean `ε*` and then by grid order.
pub fn grid_search_tune(
    methods: &[Method],
    cases: &[EvalCase],
    grid: &ParamGrid,
    base: &DetectorConfig,
    kernel: &KernelDensity,
) -> Result<TuningLog> {
    let mut configs = Vec::new();
    for &method in methods {
        let points = grid.configs(method, base);
        if points.is_empty() {
            return Err(EvalError::EmptyGrid(method.name().to_string()));
        }
        configs.extend(points);
    }
    let scores = score_matrix(&configs, cases, kernel)?;
    let entries: Vec<TuningEntry> = configs
        .into_iter()
        .zip(scores)
        .map(|(config, per_activity)| {
            let report = EvalReport::from_scores(per_activity)?;
            Ok(TuningEntry {
                method: config.method,
                config,
                mean_f1: report.f1,
                mean_epsilon_star: report.epsilon_star,
            })
        })
        .collect::<Result<_>>()?;
    let best = methods
        .iter()
        .filter_map(|&m| {
            entries
                .iter()
                .filter(|e| e.method == m)
                .fold(None::<&TuningEntry>, |best, e| match best {
                    Some(b) if e.mean_f1 < b.mean_f1 => Some(b),
                    Some(b)
                        if e.mean_f1 == b.mean_f1 && e.mean_epsilon_star <= b.mean_epsilon_star =>
                    {
                        Some(b)
                    }
                    _ => Some(e),
                })
                .cloned()
        })
        .collect();
    Ok(TuningLog {
        n_activities: cases.len(),
        entries,
        best,
    })
}

/// Scenario label of the row that averages over every activity.
pub const ALL_SCENARIOS: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub scenario: String,
    pub mean_f1: f64,
    pub mean_epsilon_star: f64,
    pub n_activities: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Rows averaging over all scenarios, one per method.
    pub fn overall(&self) -> Vec<&ComparisonRow> {
        self.rows
            .iter()
            .filter(|r| r.scenario == ALL_SCENARIOS)
            .collect()
    }

    /// Method names ordered by decreasing value of `key` on the overall rows.
    pub fn ranking(&self, key: fn(&ComparisonRow) -> f64) -> Vec<String> {
        let mut rows = self.overall();
        rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
        rows.into_iter().map(|r| r.method.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn row(method: &str, scenario: &str, scores: &[&ActivityScore]) -> ComparisonRow {
    let n = scores.len() as f64;
    ComparisonRow {
        method: method.to_string(),
        scenario: scenario.to_string(),
        mean_f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
        mean_epsilon_star: scores.iter().map(|s| s.epsilon_star).sum::<f64>() / n,
        n_activities: scores.len(),
    }
}

/// Tabulates precomputed scores: `scores[i][j]` belongs to `names[i]` on
/// `cases[j]`. Each name gets an overall row, then one row per scenario.
pub fn comparison_table(
    names: &[String],
    scores: &[Vec<ActivityScore>],
    cases: &[EvalCase],
) -> ComparisonTable {
    let scenarios: BTreeSet<&str> = cases.iter().map(|c| c.scenario.as_str()).collect();
    let mut rows = Vec::new();
    for (name, per_activity) in names.iter().zip(scores) {
        rows.push(row(
            name,
            ALL_SCENARIOS,
            &per_activity.iter().collect::<Vec<_>>(),
        ));
        for &scenario in &scenarios {
            let subset: Vec<&ActivityScore> = per_activity
                .iter()
                .zip(cases)
                .filter(|(_, c)| c.scenario == scenario)
                .map(|(s, _)| s)
                .collect();
            rows.push(row(name, scenario, &subset));
        }
    }
    ComparisonTable { rows }
}

/// Mean F1 and `ε*` of each config over `cases`, overall and per scenario.
pub fn run_comparison(
    configs: &[DetectorConfig],
    cases: &[EvalCase],
    kernel: &KernelDensity,
) -> Result<ComparisonTable> {
    let scores = score_matrix(configs, cases, kernel)?;
    let names: Vec<String> = configs
        .iter()
        .map(|c| c.method.name().to_string())
        .collect();
    Ok(comparison_table(&names, &scores, cases))
}
