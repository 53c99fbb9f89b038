use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use hrspike::evaluate::{
    comparison_table, grid_search_tune, score_activity, score_matrix, ActivityScore,
    ComparisonTable, EvalCase, TuningLog,
};
use hrspike::infer::{
    average_histograms, hr_histogram, outlier_sweep, spike_hr_histogram, spike_time_histogram,
    summarize_cohort, threshold_sweep, write_summaries_csv, write_sweep_csv, ActivityRecord,
    AthleteRecord, Histogram, InferError,
};
use hrspike::simulate::{batch_configs, simulate_batch, Scenario};
use hrspike::{detect_spikes, DetectorConfig, Method};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::corpus::{self, MANIFEST, SPIKES_SUFFIX, TRUTH_SUFFIX};
use crate::manifest::{ActivityEntry, RunManifest};
use crate::CliError;

pub struct Context {
    pub seed: u64,
    pub config: Config,
}

impl Context {
    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, self.seed, &self.config)
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn finish(out: &Path, mut manifest: RunManifest) -> Result<(), CliError> {
    manifest.outputs.sort();
    corpus::write_json(&out.join(MANIFEST), &manifest)?;
    Ok(())
}

fn parse_method(name: &str) -> Result<Method, CliError> {
    name.parse()
        .map_err(|e: hrspike::DetectError| CliError::usage(e.to_string()))
}

fn parse_scenario(name: &str) -> Result<Scenario, CliError> {
    serde_json::from_value(serde_json::Value::String(name.to_string())).map_err(|_| {
        let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
        CliError::usage(format!(
            "unknown scenario {name:?}; expected one of {}",
            known.join(", ")
        ))
    })
}

fn read_tuning(path: &Path) -> Result<TuningLog, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn simulate(
    ctx: &Context,
    out: &Path,
    count: usize,
    scenario: Option<&str>,
) -> Result<(), CliError> {
    let mut configs = batch_configs(&ctx.config.simulation, count, ctx.seed);
    if let Some(name) = scenario {
        let scenario = parse_scenario(name)?;
        configs.iter_mut().for_each(|c| c.scenario = scenario);
    }
    let activities = simulate_batch(&configs).context("simulation failed")?;
    corpus::create_dir(out)?;
    let digits = count.to_string().len().max(4);
    let mut manifest = ctx.manifest("simulate");
    for (i, (activity, config)) in activities.iter().zip(&configs).enumerate() {
        let name = format!("activity_{i:0digits$}");
        let series = format!("{name}.csv");
        let truth = format!("{name}{TRUTH_SUFFIX}");
        corpus::write_series(&out.join(&series), &activity.series)?;
        corpus::write_json(&out.join(&truth), &activity.truth)?;
        manifest.outputs.extend([series, truth]);
        manifest.activities.push(ActivityEntry {
            name,
            scenario: config.scenario.name().to_string(),
            seed: config.seed,
            spike_seed: config.spike_seed,
        });
    }
    finish(out, manifest)
}

fn detector_for(
    ctx: &Context,
    method: Option<&str>,
    tuning: Option<&Path>,
) -> Result<DetectorConfig, CliError> {
    let method = method
        .map(parse_method)
        .transpose()?
        .unwrap_or(ctx.config.detector.method);
    match tuning {
        Some(path) => read_tuning(path)?
            .best_config(method)
            .cloned()
            .ok_or_else(|| {
                CliError::usage(format!(
                    "{}: no tuned parameters for {method}",
                    path.display()
                ))
            }),
        None => Ok(DetectorConfig {
            method,
            ..ctx.config.detector.clone()
        }),
    }
}

#[derive(Serialize)]
struct FileError {
    file: String,
    error: String,
}

pub fn detect(
    ctx: &Context,
    input: &Path,
    out: &Path,
    method: Option<&str>,
    tuning: Option<&Path>,
) -> Result<(), CliError> {
    let detector = detector_for(ctx, method, tuning)?;
    let files = corpus::series_files(input)?;
    corpus::create_dir(out)?;
    let mut manifest = ctx.manifest("detect");
    manifest.config.detector = detector.clone();
    manifest.method = Some(detector.method.name().to_string());
    manifest.inputs.push(display(input));
    if let Some(t) = tuning {
        manifest.inputs.push(display(t));
    }
    if files.is_empty() {
        warn!("no .csv activities in {}", input.display());
        return finish(out, manifest);
    }
    let results: Vec<anyhow::Result<Vec<hrspike::Spike>>> = files
        .par_iter()
        .map(|path| {
            let series = corpus::read_series(path)?;
            detect_spikes(&series, &detector).with_context(|| display(path))
        })
        .collect();
    let mut errors = Vec::new();
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(spikes) => {
                let name = format!("{}{SPIKES_SUFFIX}", corpus::stem(path));
                corpus::write_json(&out.join(&name), &spikes)?;
                manifest.outputs.push(name);
            }
            Err(e) => errors.push(FileError {
                file: display(path),
                error: format!("{e:#}"),
            }),
        }
    }
    if !errors.is_empty() {
        corpus::write_json(&out.join("errors.json"), &errors)?;
        manifest.outputs.push("errors.json".into());
    }
    finish(out, manifest)?;
    match errors.len() {
        0 => Ok(()),
        n => {
            Err(anyhow::anyhow!("{n} of {} activities failed; see errors.json", files.len()).into())
        }
    }
}

/// Activities of a corpus with their ground truth and scenario labels.
fn load_cases(dir: &Path) -> Result<(Vec<String>, Vec<EvalCase>), CliError> {
    let files = corpus::series_files(dir)?;
    if files.is_empty() {
        return Err(CliError::usage(format!(
            "{}: no .csv activities",
            dir.display()
        )));
    }
    let scenarios: HashMap<String, String> = corpus::read_manifest(dir)
        .map(|m| {
            m.activities
                .into_iter()
                .map(|a| (a.name, a.scenario))
                .collect()
        })
        .unwrap_or_default();
    let names: Vec<String> = files.iter().map(|p| corpus::stem(p)).collect();
    let truths = names
        .iter()
        .map(|name| corpus::read_spikes(&dir.join(format!("{name}{TRUTH_SUFFIX}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let series: Vec<_> = files
        .par_iter()
        .map(|p| corpus::read_series(p))
        .collect::<anyhow::Result<_>>()?;
    let cases = series
        .into_iter()
        .zip(truths)
        .zip(&names)
        .map(|((series, truth), name)| EvalCase {
            series,
            truth,
            scenario: scenarios
                .get(name)
                .cloned()
                .unwrap_or_else(|| "unknown".into()),
        })
        .collect();
    Ok((names, cases))
}

pub fn tune(ctx: &Context, train: &Path, out: &Path, methods: &[String]) -> Result<(), CliError> {
    let methods: Vec<Method> = if methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        methods
            .iter()
            .map(|m| parse_method(m))
            .collect::<Result<_, _>>()?
    };
    let (_, cases) = load_cases(train)?;
    let log = grid_search_tune(
        &methods,
        &cases,
        &ctx.config.grid,
        &ctx.config.detector,
        &ctx.config.kernel,
    )
    .context("grid search failed")?;
    corpus::create_dir(out)?;
    corpus::write_json(&out.join("tuning.json"), &log)?;
    let mut manifest = ctx.manifest("tune");
    manifest.inputs.push(display(train));
    manifest.outputs.push("tuning.json".into());
    finish(out, manifest)
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    method: &'a str,
    activity: &'a str,
    scenario: &'a str,
    precision: f64,
    recall: f64,
    f1: f64,
    epsilon: f64,
    epsilon_star: f64,
}

fn method_name(dir: &Path) -> String {
    corpus::read_manifest(dir)
        .and_then(|m| m.method)
        .unwrap_or_else(|| corpus::stem(dir))
}

fn write_csv_rows<T: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = T>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(
        File::create(path).with_context(|| display(path))?,
    ));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn evaluate(
    ctx: &Context,
    truth: &Path,
    detected: &[PathBuf],
    tuning: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let (names, cases) = load_cases(truth)?;
    let mut manifest = ctx.manifest("evaluate");
    manifest.inputs.push(display(truth));
    let kernel = &ctx.config.kernel;
    let (methods, scores): (Vec<String>, Vec<Vec<ActivityScore>>) = if let Some(path) = tuning {
        let log = read_tuning(path)?;
        manifest.inputs.push(display(path));
        let configs: Vec<DetectorConfig> = log.best.iter().map(|e| e.config.clone()).collect();
        if configs.is_empty() {
            return Err(CliError::usage(format!(
                "{}: tuning log has no entries",
                path.display()
            )));
        }
        let scores = score_matrix(&configs, &cases, kernel).context("detection failed")?;
        (
            configs
                .iter()
                .map(|c| c.method.name().to_string())
                .collect(),
            scores,
        )
    } else {
        if detected.is_empty() {
            return Err(CliError::usage("evaluate needs --detected or --tuning"));
        }
        let mut methods = Vec::new();
        let mut scores = Vec::new();
        for dir in detected {
            manifest.inputs.push(display(dir));
            let per_activity = names
                .iter()
                .zip(&cases)
                .map(|(name, case)| {
                    let path = corpus::spike_file(dir, name).ok_or_else(|| {
                        CliError::usage(format!("{}: missing detections for {name}", dir.display()))
                    })?;
                    let spikes = corpus::read_spikes(&path)?;
                    Ok(score_activity(
                        &case.truth,
                        &spikes,
                        case.duration(),
                        kernel,
                    ))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            methods.push(method_name(dir));
            scores.push(per_activity);
        }
        (methods, scores)
    };
    let table: ComparisonTable = comparison_table(&methods, &scores, &cases);
    corpus::create_dir(out)?;
    let file = File::create(out.join("comparison.csv")).context("comparison.csv")?;
    table
        .write_csv(BufWriter::new(file))
        .context("comparison.csv")?;
    let rows = methods
        .iter()
        .zip(&scores)
        .flat_map(|(method, per_activity)| {
            per_activity
                .iter()
                .zip(names.iter().zip(&cases))
                .map(move |(score, (name, case))| ScoreRow {
                    method,
                    activity: name,
                    scenario: &case.scenario,
                    precision: score.precision,
                    recall: score.recall,
                    f1: score.f1,
                    epsilon: score.epsilon,
                    epsilon_star: score.epsilon_star,
                })
        });
    write_csv_rows(&out.join("scores.csv"), rows)?;
    manifest
        .outputs
        .extend(["comparison.csv".into(), "scores.csv".into()]);
    finish(out, manifest)
}

/// One athlete of the inference manifest.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AthleteEntry {
    athlete_id: String,
    label: bool,
    #[serde(default)]
    lthr: Option<f64>,
    activities: Vec<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AthleteManifest {
    Many(Vec<AthleteEntry>),
    One(AthleteEntry),
}

fn load_athlete(
    entry: &AthleteEntry,
    root: &Path,
    detector: &DetectorConfig,
) -> anyhow::Result<AthleteRecord> {
    let activities = entry
        .activities
        .iter()
        .map(|rel| {
            let path = root.join(rel);
            let series = corpus::read_series(&path)?;
            let dir = path.parent().unwrap_or(Path::new("."));
            let detections = dir.join(format!("{}{SPIKES_SUFFIX}", corpus::stem(&path)));
            let spikes = if detections.is_file() {
                corpus::read_spikes(&detections).map_err(|e| anyhow::anyhow!("{e}"))?
            } else {
                detect_spikes(&series, detector).with_context(|| display(&path))?
            };
            ActivityRecord::new(series, spikes, detector.smoothing_width)
                .with_context(|| display(&path))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut record = AthleteRecord::new(entry.athlete_id.clone(), entry.label, activities);
    record.lthr = entry.lthr;
    Ok(record)
}

#[derive(Serialize)]
struct HistogramRow {
    bin_start: f64,
    fraction: f64,
}

fn write_histogram(path: &Path, histogram: Option<Histogram>) -> anyhow::Result<()> {
    let rows: Vec<HistogramRow> = histogram
        .map(|h| {
            (0..h.fractions.len())
                .map(|i| HistogramRow {
                    bin_start: h.bin_start(i),
                    fraction: h.fractions[i],
                })
                .collect()
        })
        .unwrap_or_default();
    let file = BufWriter::new(File::create(path).with_context(|| display(path))?);
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(["bin_start", "fraction"])?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn infer(ctx: &Context, manifest_path: &Path, out: &Path) -> Result<(), CliError> {
    let settings = &ctx.config.infer;
    if let Some(&bad) = settings
        .percentiles
        .iter()
        .find(|&&p| !(p > 50.0 && p <= 100.0))
    {
        return Err(CliError::usage(format!(
            "percentile {bad} outside (50, 100]"
        )));
    }
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| CliError::usage(format!("{}: {e}", manifest_path.display())))?;
    let entries = match serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", manifest_path.display())))?
    {
        AthleteManifest::Many(v) => v,
        AthleteManifest::One(e) => vec![e],
    };
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    for e in &entries {
        if let Some(missing) = e
            .activities
            .iter()
            .map(|p| root.join(p))
            .find(|p| !p.is_file())
        {
            return Err(CliError::usage(format!(
                "{}: activity not found",
                missing.display()
            )));
        }
    }
    let records: Vec<AthleteRecord> = entries
        .par_iter()
        .map(|e| load_athlete(e, root, &ctx.config.detector).with_context(|| e.athlete_id.clone()))
        .collect::<anyhow::Result<_>>()?;
    let summaries = summarize_cohort(&records, &settings.bin_edges).map_err(|e| match e {
        InferError::InvalidEdges => CliError::usage(e.to_string()),
        e => anyhow::Error::from(e).into(),
    })?;

    corpus::create_dir(out)?;
    let mut manifest = ctx.manifest("infer");
    manifest.inputs.push(display(manifest_path));
    let mut w = BufWriter::new(File::create(out.join("summaries.csv")).context("summaries.csv")?);
    write_summaries_csv(&summaries, &mut w).context("summaries.csv")?;
    w.flush().context("summaries.csv")?;
    corpus::write_json(&out.join("summaries.json"), &summaries)?;
    manifest
        .outputs
        .extend(["summaries.csv".into(), "summaries.json".into()]);

    match threshold_sweep(&records, &settings.h_thresh) {
        Ok(points) => {
            let mut w = BufWriter::new(File::create(out.join("sweep.csv")).context("sweep.csv")?);
            write_sweep_csv(&points, &mut w).context("sweep.csv")?;
            w.flush().context("sweep.csv")?;
            manifest.outputs.push("sweep.csv".into());
        }
        Err(InferError::DegenerateLabels { .. }) => {
            warn!("threshold sweep needs two athletes of each label; skipped")
        }
        Err(e) => return Err(anyhow::Error::from(e).into()),
    }
    let outliers = outlier_sweep(&summaries, &settings.percentiles).context("outlier sweep")?;
    write_csv_rows(&out.join("outliers.csv"), &outliers)?;
    manifest.outputs.push("outliers.csv".into());

    let hist = |f: fn(&AthleteRecord) -> Histogram| {
        average_histograms(&records.iter().map(f).collect::<Vec<_>>())
    };
    for (name, h) in [
        ("hist_hr.csv", hist(hr_histogram)),
        ("hist_spike_hr.csv", hist(spike_hr_histogram)),
        ("hist_spike_time.csv", hist(spike_time_histogram)),
    ] {
        write_histogram(&out.join(name), h)?;
        manifest.outputs.push(name.into());
    }
    finish(out, manifest)
}
