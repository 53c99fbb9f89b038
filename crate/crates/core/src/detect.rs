//! Spike detection.
//!
//! Residual methods smooth the series (moving average or wavelet shrinkage),
//! subtract the smooth part and threshold the residuals. CWT methods threshold
//! the magnitude of the complex Morlet transform at a single scale instead.
//! Either threshold can be constant (a multiple of the 95th percentile) or
//! adaptive (rolling mean plus a multiple of the rolling standard deviation).

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{
    half_width, interpolate_missing, moving_average, residuals, strip_interpolated,
    HeartRateSeries, MissingMask, ResidualSeries, SeriesError,
};
use crate::wavelet::{self, FilterBank, MorletParams, ShrinkLevels, ShrinkRule, WaveletError};

/// Minimum number of usable residuals for a percentile threshold.
pub const MIN_PERCENTILE_SAMPLES: usize = 20;
/// Floor applied to CWT spike heights.
pub const MIN_CWT_HEIGHT: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error("need at least {need} usable samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("adaptive window must be at least 3 s, got {0}")]
    InvalidWindow(usize),
    #[error("threshold multiplier must be positive, got {0}")]
    InvalidMultiplier(f64),
    #[error("unknown detection method `{0}`")]
    UnknownMethod(String),
}

pub type Result<T> = std::result::Result<T, DetectError>;

/// A detected or simulated spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    /// Seconds from the start of the series.
    #[serde(rename = "t_s")]
    pub time: f64,
    #[serde(rename = "height_bpm")]
    pub height: f64,
    /// Heart rate the spike rode on.
    #[serde(rename = "base_hr_bpm")]
    pub base_hr: f64,
}

impl Spike {
    pub fn new(time: f64, height: f64, base_hr: f64) -> Self {
        Self {
            time,
            height,
            base_hr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MovConstant,
    MovAdaptive,
    DwtConstant,
    DwtAdaptive,
    CwtConstant,
    CwtAdaptive,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::MovConstant,
        Method::MovAdaptive,
        Method::DwtConstant,
        Method::DwtAdaptive,
        Method::CwtConstant,
        Method::CwtAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MovConstant => "mov_constant",
            Method::MovAdaptive => "mov_adaptive",
            Method::DwtConstant => "dwt_constant",
            Method::DwtAdaptive => "dwt_adaptive",
            Method::CwtConstant => "cwt_constant",
            Method::CwtAdaptive => "cwt_adaptive",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(
            self,
            Method::MovAdaptive | Method::DwtAdaptive | Method::CwtAdaptive
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DetectError::UnknownMethod(s.to_string()))
    }
}

/// Parameters of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub method: Method,
    /// Moving-average width in seconds. Also used for the heights and base
    /// heart rates of CWT spikes.
    pub smoothing_width: usize,
    pub threshold_multiplier: f64,
    /// Rolling window of the adaptive threshold, seconds.
    pub adaptive_window: usize,
    /// Added to the adaptive threshold, bpm.
    pub offset: f64,
    /// CWT scale in seconds.
    pub cwt_scale: f64,
    pub morlet: MorletParams,
    /// Multiplier on the per-level universal DWT threshold.
    pub dwt_multiplier: f64,
    pub wavelet: String,
    pub dwt_level: usize,
    pub shrink_rule: ShrinkRule,
    pub shrink_levels: ShrinkLevels,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            method: Method::MovConstant,
            smoothing_width: 200,
            threshold_multiplier: 2.5,
            adaptive_window: 200,
            offset: 0.01,
            cwt_scale: 20.0,
            morlet: MorletParams::default(),
            dwt_multiplier: 8.0,
            wavelet: "sym5".to_string(),
            dwt_level: 8,
            shrink_rule: ShrinkRule::Garotte,
            shrink_levels: ShrinkLevels::Finest(7),
        }
    }
}

impl DetectorConfig {
    pub fn for_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// Linear-interpolation percentile (`q` in `[0, 100]`) of unsorted values.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * (q / 100.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn included(values: &[f64], excluded: &MissingMask) -> Vec<f64> {
    excluded
        .segments(values.len())
        .into_iter()
        .flat_map(|r| values[r].iter().copied())
        .collect()
}

fn check_multiplier(multiplier: f64) -> Result<()> {
    if multiplier > 0.0 && multiplier.is_finite() {
        Ok(())
    } else {
        Err(DetectError::InvalidMultiplier(multiplier))
    }
}

fn percentile_threshold(values: &[f64], excluded: &MissingMask, multiplier: f64) -> Result<f64> {
    check_multiplier(multiplier)?;
    let usable = included(values, excluded);
    if usable.len() < MIN_PERCENTILE_SAMPLES {
        return Err(DetectError::TooFewSamples {
            got: usable.len(),
            need: MIN_PERCENTILE_SAMPLES,
        });
    }
    Ok(multiplier * percentile(&usable, 95.0))
}

fn rolling_threshold(
    values: &[f64],
    excluded: &MissingMask,
    window: usize,
    multiplier: f64,
    offset: f64,
) -> Result<Vec<f64>> {
    check_multiplier(multiplier)?;
    if window < 3 {
        return Err(DetectError::InvalidWindow(window));
    }
    let segments = excluded.segments(values.len());
    let usable: usize = segments.iter().map(Range::len).sum();
    if usable < 3 {
        return Err(DetectError::TooFewSamples {
            got: usable,
            need: 3,
        });
    }
    let half = half_width(window);
    let mut out = vec![f64::INFINITY; values.len()];
    for seg in segments {
        let x = &values[seg.clone()];
        let n = x.len();
        // Centre on the segment mean to keep the running sums well conditioned.
        let shift = x.iter().sum::<f64>() / n as f64;
        let mut s1 = vec![0.0; n + 1];
        let mut s2 = vec![0.0; n + 1];
        for (i, &v) in x.iter().enumerate() {
            let d = v - shift;
            s1[i + 1] = s1[i] + d;
            s2[i + 1] = s2[i] + d * d;
        }
        for t in 0..n {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(n);
            let count = (hi - lo) as f64;
            let m = (s1[hi] - s1[lo]) / count;
            let var = ((s2[hi] - s2[lo]) / count - m * m).max(0.0);
            out[seg.start + t] = offset + shift + m + multiplier * var.sqrt();
        }
    }
    Ok(out)
}

/// `multiplier ×` the 95th percentile of the non-excluded residuals.
pub fn constant_threshold(residuals: &ResidualSeries, multiplier: f64) -> Result<f64> {
    percentile_threshold(residuals.values(), residuals.excluded(), multiplier)
}

/// `offset + μ(t) + multiplier · σ(t)` over a centred window truncated at
/// segment edges; `σ` is the population standard deviation. Excluded indices
/// get an infinite threshold.
pub fn adaptive_threshold(
    residuals: &ResidualSeries,
    window: usize,
    multiplier: f64,
    offset: f64,
) -> Result<Vec<f64>> {
    rolling_threshold(
        residuals.values(),
        residuals.excluded(),
        window,
        multiplier,
        offset,
    )
}

/// Everything computed on the way to a spike list, for inspection and plots.
#[derive(Debug, Clone)]
pub struct DetectionTrace {
    /// Smoothed series used for heights and base heart rates.
    pub smoothed: HeartRateSeries,
    /// Values that were thresholded: residuals, or `|CWT|` for CWT methods.
    pub score: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub excluded: MissingMask,
    pub spikes: Vec<Spike>,
}

/// Maximal runs of indices with `score > threshold` and `score > 0`, never
/// crossing an excluded index.
fn exceedance_runs(score: &[f64], thresholds: &[f64], excluded: &MissingMask) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    for seg in excluded.segments(score.len()) {
        let mut start = None;
        for i in seg.clone() {
            let hit = score[i] > thresholds[i] && score[i] > 0.0;
            match (hit, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..seg.end);
        }
    }
    runs
}

fn thresholds_for(
    config: &DetectorConfig,
    score: &[f64],
    excluded: &MissingMask,
) -> Result<Vec<f64>> {
    if config.method.is_adaptive() {
        rolling_threshold(
            score,
            excluded,
            config.adaptive_window,
            config.threshold_multiplier,
            config.offset,
        )
    } else {
        let t = percentile_threshold(score, excluded, config.threshold_multiplier)?;
        Ok(vec![t; score.len()])
    }
}

fn wavelet_smooth(
    series: &HeartRateSeries,
    config: &DetectorConfig,
) -> Result<(HeartRateSeries, HeartRateSeries)> {
    let filled = interpolate_missing(series)?;
    let bank = FilterBank::by_name(&config.wavelet)?;
    let level = config
        .dwt_level
        .min(wavelet::max_level(filled.len(), bank.len()));
    if level == 0 {
        return Err(DetectError::Wavelet(WaveletError::LevelTooDeep {
            level: 1,
            len: filled.len(),
        }));
    }
    let smooth = wavelet::denoise(
        filled.samples(),
        &bank,
        level,
        config.shrink_rule,
        config.dwt_multiplier,
        config.shrink_levels,
    )?;
    let smoothed = filled.with_samples(smooth)?;
    Ok(strip_interpolated(&filled, &smoothed)?)
}

fn residual_detection(series: &HeartRateSeries, config: &DetectorConfig) -> Result<DetectionTrace> {
    let (source, smoothed) = match config.method {
        Method::MovConstant | Method::MovAdaptive => (
            series.clone(),
            moving_average(series, config.smoothing_width)?,
        ),
        _ => wavelet_smooth(series, config)?,
    };
    let resid = residuals(&source, &smoothed)?;
    let thresholds = thresholds_for(config, resid.values(), resid.excluded())?;
    let spikes = exceedance_runs(resid.values(), &thresholds, resid.excluded())
        .into_iter()
        .map(|run| {
            let peak = run
                .clone()
                .reduce(|best, i| {
                    if resid.values()[i] > resid.values()[best] {
                        i
                    } else {
                        best
                    }
                })
                .expect("runs are non-empty");
            Spike::new(peak as f64, resid.values()[peak], smoothed.samples()[peak])
        })
        .collect();
    Ok(DetectionTrace {
        smoothed,
        score: resid.values().to_vec(),
        thresholds,
        excluded: resid.excluded().clone(),
        spikes,
    })
}

fn cwt_detection(series: &HeartRateSeries, config: &DetectorConfig) -> Result<DetectionTrace> {
    let filled = interpolate_missing(series)?;
    let magnitude = wavelet::cwt_magnitude(filled.samples(), config.cwt_scale, config.morlet)?;
    let excluded = series.missing().union(series.interpolated());
    let mut score = magnitude;
    for r in excluded.ranges() {
        score[r.clone()].fill(0.0);
    }
    let thresholds = thresholds_for(config, &score, &excluded)?;
    let smoothed = moving_average(series, config.smoothing_width)?;
    let spikes = exceedance_runs(&score, &thresholds, &excluded)
        .into_iter()
        .map(|run| {
            let mid = (run.start + run.end - 1) / 2;
            let base = smoothed.samples()[mid];
            let height = (series.samples()[mid] - base).max(MIN_CWT_HEIGHT);
            Spike::new(mid as f64, height, base)
        })
        .collect();
    Ok(DetectionTrace {
        smoothed,
        score,
        thresholds,
        excluded,
        spikes,
    })
}

/// Runs a detector and keeps its intermediate signals.
pub fn detect_with_trace(
    series: &HeartRateSeries,
    config: &DetectorConfig,
) -> Result<DetectionTrace> {
    match config.method {
        Method::CwtConstant | Method::CwtAdaptive => cwt_detection(series, config),
        _ => residual_detection(series, config),
    }
}

/// Detected spikes in time order. Each contiguous exceedance run yields one
/// spike: at the largest residual for residual methods, at the run midpoint
/// for CWT methods.
pub fn detect_spikes(series: &HeartRateSeries, config: &DetectorConfig) -> Result<Vec<Spike>> {
    Ok(detect_with_trace(series, config)?.spikes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MissingMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual_series(values: Vec<f64>) -> ResidualSeries {
        let zero = HeartRateSeries::new(0.0, vec![0.0; values.len()]).unwrap();
        residuals(&HeartRateSeries::new(0.0, values).unwrap(), &zero).unwrap()
    }

    fn noisy_series(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| (140.0 + rng.random_range(-2.0f64..2.0)).round())
            .collect()
    }

    #[test]
    fn percentile_of_one_to_hundred() {
        let r = residual_series((1..=100).map(f64::from).collect());
        assert!((constant_threshold(&r, 1.0).unwrap() - 95.05).abs() < 1e-12);
    }

    #[test]
    fn constant_threshold_of_constant_residuals() {
        let r = residual_series(vec![0.8; 40]);
        assert!((constant_threshold(&r, 2.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_threshold_needs_samples() {
        let r = residual_series(vec![1.0; 10]);
        assert!(matches!(
            constant_threshold(&r, 2.5),
            Err(DetectError::TooFewSamples { got: 10, .. })
        ));
        assert!(matches!(
            constant_threshold(&residual_series(vec![1.0; 30]), 0.0),
            Err(DetectError::InvalidMultiplier(_))
        ));
    }

    #[test]
    fn adaptive_threshold_of_zero_residuals_is_offset() {
        let r = residual_series(vec![0.0; 100]);
        let t = adaptive_threshold(&r, 31, 2.5, 0.01).unwrap();
        assert!(t.iter().all(|&v| v == 0.01));
    }

    #[test]
    fn adaptive_threshold_of_constant_residuals() {
        let r = residual_series(vec![1.7; 100]);
        let t = adaptive_threshold(&r, 31, 2.5, 0.01).unwrap();
        assert!(t.iter().all(|&v| (v - 1.71).abs() < 1e-12));
        assert!(matches!(
            adaptive_threshold(&r, 2, 2.5, 0.01),
            Err(DetectError::InvalidWindow(2))
        ));
    }

    #[test]
    fn adaptive_threshold_matches_naive_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let values: Vec<f64> = (0..500).map(|_| rng.random_range(-4.0..6.0)).collect();
        let r = residual_series(values.clone());
        let fast = adaptive_threshold(&r, 61, 2.0, 0.01).unwrap();
        for t in 0..values.len() {
            let lo = t.saturating_sub(30);
            let hi = (t + 30).min(values.len() - 1);
            let w = &values[lo..=hi];
            let mu = w.iter().sum::<f64>() / w.len() as f64;
            let var = w.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / w.len() as f64;
            let expected = 0.01 + mu + 2.0 * var.sqrt();
            assert!((fast[t] - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn flat_series_has_no_spikes() {
        let s = HeartRateSeries::new(0.0, vec![140.0; 600]).unwrap();
        for method in Method::ALL {
            let spikes = detect_spikes(&s, &DetectorConfig::for_method(method)).unwrap();
            assert!(spikes.is_empty(), "{method}");
        }
    }

    #[test]
    fn single_excursion_is_one_spike() {
        let mut x = vec![140.0; 600];
        x[300] = 160.0;
        let s = HeartRateSeries::new(0.0, x).unwrap();
        let spikes = detect_spikes(&s, &DetectorConfig::default()).unwrap();
        assert_eq!(spikes.len(), 1);
        let spike = spikes[0];
        assert_eq!(spike.time, 300.0);
        // Closed form: the 201-wide window absorbs 1/201 of the excursion.
        let window = 2.0 * half_width(200) as f64 + 1.0;
        assert!((spike.height - 20.0 * (1.0 - 1.0 / window)).abs() < 1e-9);
        assert!((10.0..=20.0).contains(&spike.height));
        assert!((140.0..=141.0).contains(&spike.base_hr));
    }

    #[test]
    fn wide_run_collapses_to_one_spike() {
        let mut x = noisy_series(900, 4);
        for (k, v) in x[400..412].iter_mut().enumerate() {
            *v += 25.0 + if k == 7 { 3.0 } else { 0.0 };
        }
        let s = HeartRateSeries::new(0.0, x).unwrap();
        let spikes = detect_spikes(&s, &DetectorConfig::default()).unwrap();
        let near: Vec<_> = spikes
            .iter()
            .filter(|sp| (395.0..420.0).contains(&sp.time))
            .collect();
        assert_eq!(near.len(), 1);
        assert_eq!(near[0].time, 407.0);
    }

    #[test]
    fn every_method_finds_a_large_spike() {
        let mut x = noisy_series(1200, 9);
        for v in &mut x[598..603] {
            *v += 30.0;
        }
        let s = HeartRateSeries::new(0.0, x).unwrap();
        for method in Method::ALL {
            let spikes = detect_spikes(&s, &DetectorConfig::for_method(method)).unwrap();
            assert!(
                spikes
                    .iter()
                    .any(|sp| (sp.time - 600.0).abs() <= 5.0 && sp.height > 0.0),
                "{method}: {spikes:?}"
            );
        }
    }

    #[test]
    fn never_reports_spikes_in_gaps() {
        let mut values: Vec<Option<f64>> = noisy_series(1200, 12).into_iter().map(Some).collect();
        values[500] = Some(200.0);
        for v in &mut values[300..420] {
            *v = None;
        }
        let s = HeartRateSeries::from_options(0.0, &values).unwrap();
        for method in Method::ALL {
            let spikes = detect_spikes(&s, &DetectorConfig::for_method(method)).unwrap();
            for sp in &spikes {
                assert!(!s.is_missing(sp.time as usize), "{method} at {}", sp.time);
                assert!(sp.height > 0.0);
            }
        }
    }

    #[test]
    fn gap_split_matches_independent_halves() {
        let mut x = noisy_series(1000, 31);
        for &t in &[120usize, 333, 610, 870] {
            x[t] += 15.0;
        }
        let mut values: Vec<Option<f64>> = x.iter().copied().map(Some).collect();
        for v in &mut values[450..520] {
            *v = None;
        }
        let whole = HeartRateSeries::from_options(0.0, &values).unwrap();
        let config = DetectorConfig {
            method: Method::MovAdaptive,
            smoothing_width: 101,
            adaptive_window: 101,
            ..DetectorConfig::default()
        };
        let got = detect_spikes(&whole, &config).unwrap();
        let left = detect_spikes(
            &HeartRateSeries::new(0.0, x[..450].to_vec()).unwrap(),
            &config,
        )
        .unwrap();
        let right = detect_spikes(
            &HeartRateSeries::new(0.0, x[520..].to_vec()).unwrap(),
            &config,
        )
        .unwrap();
        let mut expected = left;
        expected.extend(
            right
                .into_iter()
                .map(|s| Spike::new(s.time + 520.0, s.height, s.base_hr)),
        );
        assert_eq!(got, expected);
        assert!(!got.is_empty());
    }

    #[test]
    fn raising_multiplier_never_adds_spikes() {
        let mut x = noisy_series(1500, 77);
        for &t in &[100usize, 400, 401, 900, 1300] {
            x[t] += 8.0;
        }
        let s = HeartRateSeries::new(0.0, x).unwrap();
        for method in [
            Method::MovConstant,
            Method::DwtConstant,
            Method::CwtConstant,
        ] {
            let mut last = usize::MAX;
            for mult in [1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0] {
                let config = DetectorConfig {
                    threshold_multiplier: mult,
                    ..DetectorConfig::for_method(method)
                };
                let n = detect_spikes(&s, &config).unwrap().len();
                assert!(n <= last, "{method} at {mult}");
                last = n;
            }
        }
    }

    #[test]
    fn detection_is_deterministic() {
        let s = HeartRateSeries::new(0.0, noisy_series(800, 5)).unwrap();
        for method in Method::ALL {
            let c = DetectorConfig::for_method(method);
            assert_eq!(
                detect_spikes(&s, &c).unwrap(),
                detect_spikes(&s, &c).unwrap()
            );
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                format!("\"{}\"", m.name())
            );
        }
        assert!("mov".parse::<Method>().is_err());
    }

    #[test]
    fn spike_json_field_names() {
        let json = serde_json::to_string(&[Spike::new(12.0, 3.5, 150.25)]).unwrap();
        assert_eq!(
            json,
            r#"[{"t_s":12.0,"height_bpm":3.5,"base_hr_bpm":150.25}]"#
        );
    }

    #[test]
    fn excluded_indices_get_infinite_threshold() {
        let s =
            HeartRateSeries::with_missing(0.0, vec![1.0; 50], MissingMask::from_ranges([10..20]))
                .unwrap();
        let r = residuals(&s, &moving_average(&s, 5).unwrap()).unwrap();
        let t = adaptive_threshold(&r, 5, 2.0, 0.01).unwrap();
        assert!(t[10..20].iter().all(|v| v.is_infinite()));
    }
}
