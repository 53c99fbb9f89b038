//! Per-athlete spike-rate inference.
//!
//! Spikes are modelled as a Poisson process whose intensity may depend on the
//! athlete's heart rate. Each athlete gets a rate MLE, a likelihood-ratio test
//! of heart-rate dependence over binned exposure, and the activity-level
//! gappy/sticky classification used as a baseline. Cohort-level tools relate
//! those summaries to a binary survey label.

mod classify;
mod cohort;
pub mod special;
mod stats;

pub use classify::{classify_activity, irregular_ratio, modal_hr, ActivityClass, STICKY_SECONDS};
pub use cohort::{
    average_histograms, hr_histogram, outlier_filter, outlier_sweep, spike_hr_histogram,
    spike_time_histogram, summarize_cohort, threshold_sweep, write_summaries_csv, write_sweep_csv,
    Histogram, OutlierPoint, SweepPoint, HR_BIN_BPM, TIME_BIN_SECONDS,
};
pub use stats::{logistic_fit, point_biserial, Correlation, LogisticFit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::Spike;
use crate::series::{moving_average, HeartRateSeries, SeriesError};
use crate::simulate::MIN_DURATION;

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Error)]
pub enum InferError {
    #[error("no recorded exposure")]
    ZeroExposure,
    #[error("only one heart-rate bin has exposure")]
    DegenerateBins,
    #[error("bin edges must be strictly increasing and at least two")]
    InvalidEdges,
    #[error("labels need both classes (and at least {need} values), got {ones} positive of {n}")]
    DegenerateLabels { n: usize, ones: usize, need: usize },
    #[error("values have zero variance")]
    ZeroVariance,
    #[error("values and labels differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("labels are perfectly separated by the predictor")]
    Separation,
    #[error("logistic fit did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("percentile must be in (50, 100], got {0}")]
    InvalidPercentile(f64),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, InferError>;

/// One activity with its detected spikes and the spike-free smoothed series.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRecord {
    pub series: HeartRateSeries,
    pub spikes: Vec<Spike>,
    /// `X̄(t)`: NaN where the series is missing.
    pub smoothed: Vec<f64>,
}

impl ActivityRecord {
    /// Builds the record, computing `X̄` at `width` seconds.
    pub fn new(series: HeartRateSeries, spikes: Vec<Spike>, width: usize) -> Result<Self> {
        let smoothed = smoothed_without_spikes(&series, &spikes, width)?;
        Ok(Self {
            series,
            spikes,
            smoothed,
        })
    }

    pub fn is_sticky(&self) -> bool {
        classify::is_sticky(&self.series)
    }

    /// Long enough and not sticky.
    pub fn counts_toward_rate(&self) -> bool {
        self.series.len() >= MIN_DURATION && !self.is_sticky()
    }

    /// Recorded seconds.
    pub fn exposure_seconds(&self) -> u64 {
        self.series.recorded_count() as u64
    }

    /// `X̄` at the spike's second, or its own base heart rate if unavailable.
    fn spike_level(&self, spike: &Spike) -> f64 {
        let t = spike.time.round();
        if t >= 0.0 && (t as usize) < self.smoothed.len() && self.smoothed[t as usize].is_finite() {
            self.smoothed[t as usize]
        } else {
            spike.base_hr
        }
    }
}

/// Moving average after replacing each spike second by the moving average
/// itself, so spikes do not lift the heart-rate level they are binned by.
pub fn smoothed_without_spikes(
    series: &HeartRateSeries,
    spikes: &[Spike],
    width: usize,
) -> Result<Vec<f64>> {
    let first = moving_average(series, width)?;
    let mut cleaned = series.samples().to_vec();
    for s in spikes {
        let t = s.time.round();
        if t >= 0.0 && (t as usize) < cleaned.len() && !series.is_missing(t as usize) {
            cleaned[t as usize] = first.samples()[t as usize];
        }
    }
    let second = moving_average(&series.with_samples(cleaned)?, width)?;
    Ok(second.samples().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AthleteRecord {
    pub athlete_id: String,
    /// Reported a heart-rhythm problem.
    pub label: bool,
    pub lthr: Option<f64>,
    #[serde(skip)]
    pub activities: Vec<ActivityRecord>,
}

impl AthleteRecord {
    pub fn new(
        athlete_id: impl Into<String>,
        label: bool,
        activities: Vec<ActivityRecord>,
    ) -> Self {
        Self {
            athlete_id: athlete_id.into(),
            label,
            lthr: None,
            activities,
        }
    }

    /// Activities used for rate estimation.
    pub fn rate_activities(&self) -> impl Iterator<Item = &ActivityRecord> {
        self.activities.iter().filter(|a| a.counts_toward_rate())
    }

    pub fn spike_count(&self) -> u64 {
        self.rate_activities().map(|a| a.spikes.len() as u64).sum()
    }

    /// Spikes riding on a heart rate of at least `h_thresh`.
    pub fn spike_count_above(&self, h_thresh: f64) -> u64 {
        self.rate_activities()
            .map(|a| a.spikes.iter().filter(|s| s.base_hr >= h_thresh).count() as u64)
            .sum()
    }

    pub fn exposure_seconds(&self) -> u64 {
        self.rate_activities()
            .map(ActivityRecord::exposure_seconds)
            .sum()
    }

    pub fn hours(&self) -> f64 {
        self.exposure_seconds() as f64 / SECONDS_PER_HOUR
    }

    /// Modal heart rate over every recorded sample of every activity.
    pub fn modal_hr(&self) -> Option<f64> {
        modal_hr(self.activities.iter().flat_map(|a| recorded(&a.series)))
    }

    /// Classifies every activity of at least the minimum duration against
    /// the athlete's gap threshold.
    pub fn classify(&self) -> Vec<ActivityClass> {
        let modal = self.modal_hr();
        self.activities
            .iter()
            .filter(|a| a.series.len() >= MIN_DURATION)
            .map(|a| classify_activity(&a.series, self.lthr, modal))
            .collect()
    }
}

fn recorded(series: &HeartRateSeries) -> impl Iterator<Item = f64> + '_ {
    series
        .samples()
        .iter()
        .enumerate()
        .filter(|(i, _)| !series.is_missing(*i))
        .map(|(_, &v)| v)
}

/// `λ̂ = N / T` in spikes per hour.
pub fn poisson_rate(record: &AthleteRecord) -> Result<f64> {
    rate(record.spike_count(), record.exposure_seconds())
}

fn rate(n: u64, seconds: u64) -> Result<f64> {
    if seconds == 0 {
        return Err(InferError::ZeroExposure);
    }
    Ok(n as f64 / (seconds as f64 / SECONDS_PER_HOUR))
}

/// Default bin edges: 10 bpm bins over `[40, 220]`.
pub fn default_bin_edges() -> Vec<f64> {
    (0..=18).map(|i| 40.0 + 10.0 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBin {
    pub hr_lo: f64,
    pub hr_hi: f64,
    pub n: u64,
    pub seconds: u64,
    pub hours: f64,
    /// Spikes per hour.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub d: f64,
    pub p_value: f64,
    pub dof: usize,
    pub bins: Vec<RateBin>,
}

fn bin_index(edges: &[f64], x: f64) -> usize {
    // Values outside the outer edges are counted in the edge bins.
    edges[1..edges.len() - 1].partition_point(|&e| e <= x)
}

/// Spike counts and exposure seconds per heart-rate bin of `X̄`.
pub fn binned_counts(record: &AthleteRecord, edges: &[f64]) -> Result<(Vec<u64>, Vec<u64>)> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(InferError::InvalidEdges);
    }
    let k = edges.len() - 1;
    let mut counts = vec![0u64; k];
    let mut seconds = vec![0u64; k];
    for a in record.rate_activities() {
        for (i, &x) in a.smoothed.iter().enumerate() {
            if !a.series.is_missing(i) && x.is_finite() {
                seconds[bin_index(edges, x)] += 1;
            }
        }
        for s in &a.spikes {
            counts[bin_index(edges, a.spike_level(s))] += 1;
        }
    }
    Ok((counts, seconds))
}

fn merge_empty_bins(edges: &[f64], counts: &[u64], seconds: &[u64]) -> Vec<RateBin> {
    let mut bins: Vec<RateBin> = (0..counts.len())
        .map(|i| RateBin {
            hr_lo: edges[i],
            hr_hi: edges[i + 1],
            n: counts[i],
            seconds: seconds[i],
            hours: 0.0,
            rate: 0.0,
        })
        .collect();
    // A bin without exposure joins its right neighbour (the left one for the
    // last bin).
    while bins.len() > 1 {
        let Some(i) = bins.iter().position(|b| b.seconds == 0) else {
            break;
        };
        let j = if i + 1 < bins.len() { i + 1 } else { i - 1 };
        let gone = bins.remove(i);
        let keep = &mut bins[if j > i { j - 1 } else { j }];
        keep.hr_lo = keep.hr_lo.min(gone.hr_lo);
        keep.hr_hi = keep.hr_hi.max(gone.hr_hi);
        keep.n += gone.n;
        keep.seconds += gone.seconds;
    }
    for b in &mut bins {
        b.hours = b.seconds as f64 / SECONDS_PER_HOUR;
        b.rate = if b.seconds > 0 {
            b.n as f64 / b.hours
        } else {
            0.0
        };
    }
    bins
}

fn n_log_rate(n: u64, hours: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * (n as f64 / hours).ln()
    }
}

/// Likelihood-ratio test of a heart-rate-dependent spike rate against a
/// constant one: `D = 2[Σ N_i ln(N_i/T_i) − N ln(N/T)]`, compared against
/// chi-squared with `k − 1` degrees of freedom after merging empty bins.
pub fn lr_test(record: &AthleteRecord, edges: &[f64]) -> Result<LrTest> {
    let (counts, seconds) = binned_counts(record, edges)?;
    let total: u64 = seconds.iter().sum();
    if total == 0 {
        return Err(InferError::ZeroExposure);
    }
    let requested = counts.len();
    let bins = merge_empty_bins(edges, &counts, &seconds);
    let k = bins.len();
    if k == 1 {
        if requested > 1 {
            return Err(InferError::DegenerateBins);
        }
        return Ok(LrTest {
            d: 0.0,
            p_value: 1.0,
            dof: 0,
            bins,
        });
    }
    let n: u64 = bins.iter().map(|b| b.n).sum();
    let alt: f64 = bins.iter().map(|b| n_log_rate(b.n, b.hours)).sum();
    let null = n_log_rate(n, total as f64 / SECONDS_PER_HOUR);
    let d = (2.0 * (alt - null)).max(0.0);
    Ok(LrTest {
        d,
        p_value: special::chi2_sf(d, (k - 1) as f64),
        dof: k - 1,
        bins,
    })
}

/// Per-athlete row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AthleteSummary {
    pub athlete_id: String,
    pub label: bool,
    pub n_spikes: u64,
    pub hours: f64,
    pub lambda_hat: f64,
    pub bins: Vec<RateBin>,
    pub d: Option<f64>,
    pub p_value: Option<f64>,
    /// Percent; absent when no activity was Regular or Irregular.
    pub irregular_ratio: Option<f64>,
}

pub fn summarize_athlete(record: &AthleteRecord, edges: &[f64]) -> Result<AthleteSummary> {
    let lambda_hat = poisson_rate(record)?;
    let (d, p_value, bins) = match lr_test(record, edges) {
        Ok(t) => (Some(t.d), Some(t.p_value), t.bins),
        Err(InferError::DegenerateBins) => {
            let (c, s) = binned_counts(record, edges)?;
            (None, None, merge_empty_bins(edges, &c, &s))
        }
        Err(e) => return Err(e),
    };
    Ok(AthleteSummary {
        athlete_id: record.athlete_id.clone(),
        label: record.label,
        n_spikes: record.spike_count(),
        hours: record.hours(),
        lambda_hat,
        bins,
        d,
        p_value,
        irregular_ratio: irregular_ratio(&record.classify()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_activity(bpm: f64, seconds: usize, spikes: &[f64]) -> ActivityRecord {
        // A slow ramp avoids stickiness while keeping X̄ near `bpm`.
        let samples: Vec<f64> = (0..seconds).map(|i| bpm + (i % 2) as f64).collect();
        let spikes = spikes.iter().map(|&t| Spike::new(t, 10.0, bpm)).collect();
        ActivityRecord::new(HeartRateSeries::new(0.0, samples).unwrap(), spikes, 51).unwrap()
    }

    #[test]
    fn rate_is_count_over_hours() {
        let times: Vec<f64> = (0..10).map(|i| 100.0 + 300.0 * i as f64).collect();
        let acts = (0..5)
            .map(|k| flat_activity(140.0, 3600, if k == 0 { &times } else { &[] }))
            .collect();
        let r = AthleteRecord::new("a", false, acts);
        assert_eq!(poisson_rate(&r).unwrap(), 2.0);
        let none = AthleteRecord::new("b", false, vec![flat_activity(140.0, 3600, &[])]);
        assert_eq!(poisson_rate(&none).unwrap(), 0.0);
        let empty = AthleteRecord::new("c", false, Vec::new());
        assert!(matches!(
            poisson_rate(&empty),
            Err(InferError::ZeroExposure)
        ));
    }

    #[test]
    fn short_and_sticky_activities_are_ignored() {
        let short = flat_activity(140.0, 299, &[10.0]);
        let sticky = ActivityRecord::new(
            HeartRateSeries::new(0.0, vec![120.0; 600]).unwrap(),
            vec![],
            51,
        )
        .unwrap();
        let r = AthleteRecord::new(
            "a",
            false,
            vec![short, sticky, flat_activity(140.0, 1800, &[5.0])],
        );
        assert_eq!(r.spike_count(), 1);
        assert_eq!(r.exposure_seconds(), 1800);
        assert_eq!(poisson_rate(&r).unwrap(), 2.0);
    }

    #[test]
    fn doubling_activities_keeps_rate() {
        let acts = vec![
            flat_activity(140.0, 1000, &[3.0, 400.0]),
            flat_activity(170.0, 2000, &[50.0]),
        ];
        let once = AthleteRecord::new("a", false, acts.clone());
        let twice = AthleteRecord::new("a", false, acts.iter().chain(&acts).cloned().collect());
        assert_eq!(poisson_rate(&once).unwrap(), poisson_rate(&twice).unwrap());
    }

    #[test]
    fn single_bin_is_trivial() {
        let r = AthleteRecord::new("a", false, vec![flat_activity(140.0, 3600, &[10.0, 20.0])]);
        let t = lr_test(&r, &[0.0, 300.0]).unwrap();
        assert_eq!((t.d, t.p_value, t.dof), (0.0, 1.0, 0));
        assert_eq!(t.bins[0].n, 2);
        assert!(matches!(
            lr_test(&r, &default_bin_edges()),
            Err(InferError::DegenerateBins)
        ));
    }

    #[test]
    fn bins_account_for_everything() {
        let r = AthleteRecord::new(
            "a",
            false,
            vec![
                flat_activity(95.0, 1200, &[5.0, 90.0]),
                flat_activity(160.0, 700, &[100.0]),
                flat_activity(250.0, 400, &[1.0]),
            ],
        );
        let t = lr_test(&r, &default_bin_edges()).unwrap();
        assert_eq!(t.bins.iter().map(|b| b.n).sum::<u64>(), 4);
        assert_eq!(t.bins.iter().map(|b| b.seconds).sum::<u64>(), 2300);
        assert!(t.bins.iter().all(|b| b.seconds > 0));
        assert_eq!(t.dof, t.bins.len() - 1);
        assert!(t.d >= 0.0);
        // Out-of-range levels land in the top bin.
        assert_eq!(t.bins.last().unwrap().hr_hi, 220.0);
    }

    #[test]
    fn statistic_matches_direct_formula() {
        let r = AthleteRecord::new(
            "a",
            false,
            vec![
                flat_activity(120.0, 3600, &[10.0]),
                flat_activity(170.0, 1800, &[10.0, 500.0, 900.0, 1300.0]),
            ],
        );
        let t = lr_test(&r, &[100.0, 150.0, 200.0]).unwrap();
        let (n1, t1, n2, t2) = (1.0f64, 1.0f64, 4.0f64, 0.5f64);
        let d = 2.0 * (n1 * (n1 / t1).ln() + n2 * (n2 / t2).ln() - 5.0 * (5.0f64 / 1.5).ln());
        assert!((t.d - d).abs() < 1e-12);
        assert!((t.p_value - special::chi2_sf(d, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn spikes_do_not_lift_their_own_level() {
        let mut samples = vec![150.0; 600];
        samples[300] = 190.0;
        let s = HeartRateSeries::new(0.0, samples).unwrap();
        let spikes = vec![Spike::new(300.0, 40.0, 150.0)];
        let x = smoothed_without_spikes(&s, &spikes, 51).unwrap();
        let lifted = moving_average(&s, 51).unwrap();
        assert!((x[300] - 150.0).abs() < (lifted.samples()[300] - 150.0).abs());
        assert!((x[300] - 150.0).abs() < 0.02);
    }
}
