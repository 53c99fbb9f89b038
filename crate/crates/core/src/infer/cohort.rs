//! Cohort-level sweeps, outlier filtering, histograms and table output.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{point_biserial, summarize_athlete, AthleteRecord, AthleteSummary, InferError, Result};
use crate::detect::percentile;

/// Correlation of the rate with the labels at one threshold; absent when the
/// correlation is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub h_thresh: f64,
    pub r: Option<f64>,
    pub p: Option<f64>,
}

fn correlation_or_null(values: &[f64], labels: &[bool]) -> Result<(Option<f64>, Option<f64>)> {
    match point_biserial(values, labels) {
        Ok(c) => Ok((Some(c.r), Some(c.p_value))),
        Err(InferError::ZeroVariance | InferError::DegenerateLabels { .. }) => Ok((None, None)),
        Err(e) => Err(e),
    }
}

fn check_classes(labels: &[bool]) -> Result<()> {
    let ones = labels.iter().filter(|&&l| l).count();
    if ones < 2 || labels.len() - ones < 2 {
        return Err(InferError::DegenerateLabels {
            n: labels.len(),
            ones,
            need: 4,
        });
    }
    Ok(())
}

/// Summaries for every athlete, computed in parallel, in input order.
pub fn summarize_cohort(records: &[AthleteRecord], edges: &[f64]) -> Result<Vec<AthleteSummary>> {
    records
        .par_iter()
        .map(|r| summarize_athlete(r, edges))
        .collect()
}

/// Point-biserial correlation of the rate of spikes with `base_hr ≥ h`
/// against the labels, for each `h` in `grid`.
pub fn threshold_sweep(records: &[AthleteRecord], grid: &[f64]) -> Result<Vec<SweepPoint>> {
    let labels: Vec<bool> = records.iter().map(|r| r.label).collect();
    check_classes(&labels)?;
    let hours: Vec<f64> = records
        .iter()
        .map(|r| match r.hours() {
            h if h > 0.0 => Ok(h),
            _ => Err(InferError::ZeroExposure),
        })
        .collect::<Result<_>>()?;
    grid.iter()
        .map(|&h| {
            let rates: Vec<f64> = records
                .iter()
                .zip(&hours)
                .map(|(r, t)| r.spike_count_above(h) as f64 / t)
                .collect();
            let (r, p) = correlation_or_null(&rates, &labels)?;
            Ok(SweepPoint { h_thresh: h, r, p })
        })
        .collect()
}

fn cutoff(values: impl Iterator<Item = f64>, pct: f64) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| percentile(&v, pct))
}

/// Athletes not above the `pct` percentile in either rate or irregular ratio.
pub fn outlier_filter(summaries: &[AthleteSummary], pct: f64) -> Result<Vec<AthleteSummary>> {
    if !(pct > 50.0 && pct <= 100.0) {
        return Err(InferError::InvalidPercentile(pct));
    }
    let rate_cut = cutoff(summaries.iter().map(|s| s.lambda_hat), pct);
    let ratio_cut = cutoff(summaries.iter().filter_map(|s| s.irregular_ratio), pct);
    let above = |v: Option<f64>, cut: Option<f64>| matches!((v, cut), (Some(v), Some(c)) if v > c);
    Ok(summaries
        .iter()
        .filter(|s| !above(Some(s.lambda_hat), rate_cut) && !above(s.irregular_ratio, ratio_cut))
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierPoint {
    pub percentile: f64,
    pub n_kept: usize,
    pub r_lambda: Option<f64>,
    pub p_lambda: Option<f64>,
    pub r_irregular: Option<f64>,
    pub p_irregular: Option<f64>,
}

/// Correlations of rate and irregular ratio with the labels after filtering
/// at each percentile.
pub fn outlier_sweep(
    summaries: &[AthleteSummary],
    percentiles: &[f64],
) -> Result<Vec<OutlierPoint>> {
    percentiles
        .iter()
        .map(|&pct| {
            let kept = outlier_filter(summaries, pct)?;
            let labels: Vec<bool> = kept.iter().map(|s| s.label).collect();
            let rates: Vec<f64> = kept.iter().map(|s| s.lambda_hat).collect();
            let (r_lambda, p_lambda) = correlation_or_null(&rates, &labels)?;
            let (ratios, ratio_labels): (Vec<f64>, Vec<bool>) = kept
                .iter()
                .filter_map(|s| s.irregular_ratio.map(|r| (r, s.label)))
                .unzip();
            let (r_irregular, p_irregular) = correlation_or_null(&ratios, &ratio_labels)?;
            Ok(OutlierPoint {
                percentile: pct,
                n_kept: kept.len(),
                r_lambda,
                p_lambda,
                r_irregular,
                p_irregular,
            })
        })
        .collect()
}

/// Fixed-width histogram starting at zero, normalised to unit total when
/// non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub fractions: Vec<f64>,
}

impl Histogram {
    fn from_values(values: impl Iterator<Item = f64>, bin_width: f64) -> Self {
        let mut counts: Vec<f64> = Vec::new();
        for v in values.filter(|v| v.is_finite() && *v >= 0.0) {
            let i = (v / bin_width).floor() as usize;
            if counts.len() <= i {
                counts.resize(i + 1, 0.0);
            }
            counts[i] += 1.0;
        }
        let total: f64 = counts.iter().sum();
        if total > 0.0 {
            counts.iter_mut().for_each(|c| *c /= total);
        }
        Self {
            bin_width,
            fractions: counts,
        }
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        i as f64 * self.bin_width
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.iter().all(|&f| f == 0.0)
    }
}

pub const HR_BIN_BPM: f64 = 5.0;
pub const TIME_BIN_SECONDS: f64 = 60.0;

/// Share of recorded seconds in each 5 bpm band.
pub fn hr_histogram(record: &AthleteRecord) -> Histogram {
    let values = record.rate_activities().flat_map(|a| {
        a.series
            .samples()
            .iter()
            .enumerate()
            .filter(|(i, _)| !a.series.is_missing(*i))
            .map(|(_, &v)| v)
    });
    Histogram::from_values(values, HR_BIN_BPM)
}

/// Share of spikes by base heart rate, 5 bpm bands.
pub fn spike_hr_histogram(record: &AthleteRecord) -> Histogram {
    let values = record
        .rate_activities()
        .flat_map(|a| a.spikes.iter().map(|s| s.base_hr));
    Histogram::from_values(values, HR_BIN_BPM)
}

/// Share of spikes by minute into the activity.
pub fn spike_time_histogram(record: &AthleteRecord) -> Histogram {
    let values = record
        .rate_activities()
        .flat_map(|a| a.spikes.iter().map(|s| s.time));
    Histogram::from_values(values, TIME_BIN_SECONDS)
}

/// Mean of per-athlete histograms, each athlete weighted equally. Empty
/// histograms are skipped.
pub fn average_histograms(histograms: &[Histogram]) -> Option<Histogram> {
    let used: Vec<&Histogram> = histograms.iter().filter(|h| !h.is_empty()).collect();
    let first = used.first()?;
    let len = used.iter().map(|h| h.fractions.len()).max().unwrap_or(0);
    let mut fractions = vec![0.0; len];
    for h in &used {
        for (acc, f) in fractions.iter_mut().zip(&h.fractions) {
            *acc += f / used.len() as f64;
        }
    }
    Some(Histogram {
        bin_width: first.bin_width,
        fractions,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `athlete_id,n_spikes,hours,lambda,irregular_ratio,D,p`; undefined values
/// are left empty.
pub fn write_summaries_csv<W: Write>(summaries: &[AthleteSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "athlete_id",
        "n_spikes",
        "hours",
        "lambda",
        "irregular_ratio",
        "D",
        "p",
    ])?;
    for s in summaries {
        w.write_record([
            s.athlete_id.clone(),
            s.n_spikes.to_string(),
            s.hours.to_string(),
            s.lambda_hat.to_string(),
            opt(s.irregular_ratio),
            opt(s.d),
            opt(s.p_value),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `h_thresh,r,p`; null correlations are left empty.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["h_thresh", "r", "p"])?;
    for p in points {
        w.write_record([p.h_thresh.to_string(), opt(p.r), opt(p.p)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
