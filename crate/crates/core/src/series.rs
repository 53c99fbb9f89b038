//! 1 Hz heart-rate series with explicit missing-data masks.
//!
//! A [`HeartRateSeries`] stores one bpm value per second. Seconds without a
//! recording are tracked in a [`MissingMask`] and hold `NaN` in `samples`.
//! Gap filling ([`interpolate_missing`]) keeps the original mask around so
//! that [`strip_interpolated`] can later exclude the filled seconds from every
//! residual and threshold computation.

use std::io::{Read, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest plausible heart rate accepted by [`HeartRateSeries::validate`].
pub const MIN_VALID_BPM: f64 = 20.0;
/// Highest plausible heart rate accepted by [`HeartRateSeries::validate`].
pub const MAX_VALID_BPM: f64 = 260.0;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series is empty")]
    EmptySeries,
    #[error("series has {recorded} recorded samples, need at least 2")]
    AllMissing { recorded: usize },
    #[error("missing mask does not fit a series of length {len}")]
    MaskMismatch { len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{} samples outside [{MIN_VALID_BPM}, {MAX_VALID_BPM}] bpm, first at index {}", .indices.len(), .indices[0])]
    OutOfRange { indices: Vec<usize> },
    #[error("row {row}: timestamps must be strictly increasing")]
    NonMonotonic { row: usize },
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// Sorted, disjoint, non-adjacent half-open index ranges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingMask {
    ranges: Vec<Range<usize>>,
}

impl MissingMask {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a mask from arbitrary ranges; overlapping or touching ranges are
    /// merged and empty ones dropped.
    pub fn from_ranges<I: IntoIterator<Item = Range<usize>>>(ranges: I) -> Self {
        let mut v: Vec<Range<usize>> = ranges.into_iter().filter(|r| r.start < r.end).collect();
        v.sort_by_key(|r| r.start);
        let mut merged: Vec<Range<usize>> = Vec::with_capacity(v.len());
        for r in v {
            match merged.last_mut() {
                Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
                _ => merged.push(r),
            }
        }
        Self { ranges: merged }
    }

    /// Mask covering every index `i` with `flags[i] == true`.
    pub fn from_flags(flags: &[bool]) -> Self {
        let mut ranges = Vec::new();
        let mut start = None;
        for (i, &f) in flags.iter().enumerate() {
            match (f, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    ranges.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            ranges.push(s..flags.len());
        }
        Self { ranges }
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Number of masked indices.
    pub fn count(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).sum()
    }

    pub fn contains(&self, index: usize) -> bool {
        match self.ranges.binary_search_by(|r| r.start.cmp(&index)) {
            Ok(_) => true,
            Err(0) => false,
            Err(pos) => self.ranges[pos - 1].end > index,
        }
    }

    pub fn fits(&self, len: usize) -> bool {
        self.ranges.last().is_none_or(|r| r.end <= len)
    }

    pub fn union(&self, other: &MissingMask) -> MissingMask {
        Self::from_ranges(self.ranges.iter().chain(other.ranges.iter()).cloned())
    }

    pub fn to_flags(&self, len: usize) -> Vec<bool> {
        let mut flags = vec![false; len];
        for r in &self.ranges {
            for f in &mut flags[r.start.min(len)..r.end.min(len)] {
                *f = true;
            }
        }
        flags
    }

    /// Unmasked runs of `0..len`, in order.
    pub fn segments(&self, len: usize) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.ranges.len() + 1);
        let mut cursor = 0;
        for r in &self.ranges {
            if r.start > cursor {
                out.push(cursor..r.start.min(len));
            }
            cursor = r.end;
        }
        if cursor < len {
            out.push(cursor..len);
        }
        out
    }
}

/// Uniform 1 Hz heart-rate recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeartRateSeries {
    start_time: f64,
    samples: Vec<f64>,
    missing: MissingMask,
    interpolated: MissingMask,
}

impl HeartRateSeries {
    pub fn new(start_time: f64, samples: Vec<f64>) -> Result<Self> {
        Self::with_missing(start_time, samples, MissingMask::new())
    }

    /// Series whose samples inside `missing` are unknown. Their stored values
    /// are replaced by `NaN`.
    pub fn with_missing(
        start_time: f64,
        mut samples: Vec<f64>,
        missing: MissingMask,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(SeriesError::EmptySeries);
        }
        if !missing.fits(samples.len()) {
            return Err(SeriesError::MaskMismatch { len: samples.len() });
        }
        for r in missing.ranges() {
            samples[r.clone()].fill(f64::NAN);
        }
        Ok(Self {
            start_time,
            samples,
            missing,
            interpolated: MissingMask::new(),
        })
    }

    /// `None` entries become missing seconds.
    pub fn from_options(start_time: f64, values: &[Option<f64>]) -> Result<Self> {
        let flags: Vec<bool> = values.iter().map(Option::is_none).collect();
        let samples = values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Self::with_missing(start_time, samples, MissingMask::from_flags(&flags))
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Raw values; `NaN` inside the missing mask.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn missing(&self) -> &MissingMask {
        &self.missing
    }

    /// Seconds that were filled by [`interpolate_missing`].
    pub fn interpolated(&self) -> &MissingMask {
        &self.interpolated
    }

    pub fn is_missing(&self, index: usize) -> bool {
        self.missing.contains(index)
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        if index >= self.samples.len() || self.missing.contains(index) {
            None
        } else {
            Some(self.samples[index])
        }
    }

    pub fn recorded_count(&self) -> usize {
        self.samples.len() - self.missing.count()
    }

    /// Duration in seconds (one sample per second).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64
    }

    /// Contiguous runs of recorded seconds.
    pub fn segments(&self) -> Vec<Range<usize>> {
        self.missing.segments(self.samples.len())
    }

    /// Copy of `self` with new sample values and the same masks.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(SeriesError::LengthMismatch {
                left: self.samples.len(),
                right: samples.len(),
            });
        }
        let mut out = Self::with_missing(self.start_time, samples, self.missing.clone())?;
        out.interpolated = self.interpolated.clone();
        Ok(out)
    }

    /// Indices of recorded samples outside the plausible bpm range.
    pub fn out_of_range(&self) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|&(i, &v)| {
                !self.missing.contains(i) && !(MIN_VALID_BPM..=MAX_VALID_BPM).contains(&v)
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let indices = self.out_of_range();
        if indices.is_empty() {
            Ok(())
        } else {
            Err(SeriesError::OutOfRange { indices })
        }
    }

    /// Moves implausible samples into the missing mask and reports which
    /// indices were affected.
    pub fn flag_out_of_range(self) -> (Self, Vec<usize>) {
        let bad = self.out_of_range();
        if bad.is_empty() {
            return (self, bad);
        }
        let extra = MissingMask::from_ranges(bad.iter().map(|&i| i..i + 1));
        let missing = self.missing.union(&extra);
        let mut out = Self::with_missing(self.start_time, self.samples, missing)
            .expect("mask derived from in-bounds indices");
        out.interpolated = self.interpolated;
        (out, bad)
    }

    /// Reads the `t_s,bpm` CSV format. Timestamps are snapped to the nearest
    /// second; holes in the timestamp sequence and empty `bpm` fields become
    /// missing seconds.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "t_s" || &headers[1] != "bpm" {
            return Err(SeriesError::Parse {
                row: 0,
                msg: "expected header `t_s,bpm`".into(),
            });
        }
        let mut rows: Vec<(i64, Option<f64>)> = Vec::new();
        let mut last_raw = f64::NEG_INFINITY;
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record?;
            let t: f64 = record[0].parse().map_err(|_| SeriesError::Parse {
                row,
                msg: format!("bad timestamp `{}`", &record[0]),
            })?;
            if !t.is_finite() || t <= last_raw {
                return Err(SeriesError::NonMonotonic { row });
            }
            last_raw = t;
            let snapped = t.round() as i64;
            if rows.last().is_some_and(|&(prev, _)| snapped <= prev) {
                return Err(SeriesError::NonMonotonic { row });
            }
            let field = record.get(1).unwrap_or("");
            let bpm = if field.is_empty() {
                None
            } else {
                Some(field.parse::<f64>().map_err(|_| SeriesError::Parse {
                    row,
                    msg: format!("bad bpm `{field}`"),
                })?)
            };
            rows.push((snapped, bpm));
        }
        let Some(&(t0, _)) = rows.first() else {
            return Err(SeriesError::EmptySeries);
        };
        let len = (rows.last().unwrap().0 - t0 + 1) as usize;
        let mut values = vec![None; len];
        for (t, bpm) in rows {
            values[(t - t0) as usize] = bpm;
        }
        Self::from_options(t0 as f64, &values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_s", "bpm"])?;
        for (i, &v) in self.samples.iter().enumerate() {
            let t = format_number(self.start_time + i as f64);
            let bpm = if self.missing.contains(i) {
                String::new()
            } else {
                format_number(v)
            };
            w.write_record([t, bpm])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Integers print without a fractional part, everything else in shortest
/// round-trip form.
pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Residuals of a series against a smoothed copy of itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    values: Vec<f64>,
    excluded: MissingMask,
    source_smoothed: HeartRateSeries,
}

impl ResidualSeries {
    /// Residual values; zero at excluded indices.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices that take no part in thresholds or detection.
    pub fn excluded(&self) -> &MissingMask {
        &self.excluded
    }

    pub fn source_smoothed(&self) -> &HeartRateSeries {
        &self.source_smoothed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_excluded(&self, index: usize) -> bool {
        self.excluded.contains(index)
    }

    /// Values at non-excluded indices, in order.
    pub fn included_values(&self) -> Vec<f64> {
        self.segments()
            .into_iter()
            .flat_map(|r| self.values[r].iter().copied())
            .collect()
    }

    /// Contiguous runs of non-excluded indices.
    pub fn segments(&self) -> Vec<Range<usize>> {
        self.excluded.segments(self.values.len())
    }
}

/// Fills every missing second by linear interpolation between the last and
/// next recorded samples. Leading and trailing gaps repeat the nearest
/// recorded value. The filled seconds are remembered in
/// [`HeartRateSeries::interpolated`].
pub fn interpolate_missing(series: &HeartRateSeries) -> Result<HeartRateSeries> {
    let recorded = series.recorded_count();
    if recorded < 2 {
        return Err(SeriesError::AllMissing { recorded });
    }
    let n = series.len();
    let mut samples = series.samples.clone();
    for gap in series.missing.ranges() {
        let before = gap.start.checked_sub(1);
        let after = (gap.end < n).then_some(gap.end);
        match (before, after) {
            (Some(a), Some(b)) => {
                let (va, vb) = (samples[a], samples[b]);
                let span = (b - a) as f64;
                for i in gap.clone() {
                    samples[i] = va + (vb - va) * ((i - a) as f64 / span);
                }
            }
            (Some(a), None) => {
                let va = samples[a];
                samples[gap.clone()].fill(va);
            }
            (None, Some(b)) => {
                let vb = samples[b];
                samples[gap.clone()].fill(vb);
            }
            (None, None) => unreachable!("at least two recorded samples"),
        }
    }
    Ok(HeartRateSeries {
        start_time: series.start_time,
        samples,
        missing: MissingMask::new(),
        interpolated: series.interpolated.union(&series.missing),
    })
}

/// Re-applies the gaps filled by [`interpolate_missing`] to a series and its
/// smoothed counterpart so that filled seconds drop out of all later
/// computations.
pub fn strip_interpolated(
    series: &HeartRateSeries,
    smoothed: &HeartRateSeries,
) -> Result<(HeartRateSeries, HeartRateSeries)> {
    let n = series.len();
    if smoothed.len() != n {
        return Err(SeriesError::MaskMismatch {
            len: smoothed.len(),
        });
    }
    let mask = series
        .missing
        .union(&series.interpolated)
        .union(&smoothed.missing)
        .union(&smoothed.interpolated);
    if !mask.fits(n) {
        return Err(SeriesError::MaskMismatch { len: n });
    }
    let a = HeartRateSeries::with_missing(series.start_time, series.samples.clone(), mask.clone())?;
    let b = HeartRateSeries::with_missing(smoothed.start_time, smoothed.samples.clone(), mask)?;
    Ok((a, b))
}

/// Half-width `i` of a centred window of nominal width `w`. Odd widths give
/// `w = 2i + 1` exactly; even widths are widened to `w + 1`.
pub fn half_width(width: usize) -> usize {
    width / 2
}

/// Centred moving average. The window is truncated at segment boundaries and
/// the divisor shrinks to the number of samples actually averaged; no window
/// reaches across a missing region.
pub fn moving_average(series: &HeartRateSeries, width: usize) -> Result<HeartRateSeries> {
    if series.is_empty() {
        return Err(SeriesError::EmptySeries);
    }
    let half = half_width(width.max(1));
    let mut out = vec![f64::NAN; series.len()];
    for seg in series.segments() {
        smooth_segment(&series.samples[seg.clone()], half, &mut out[seg]);
    }
    let mut smoothed =
        HeartRateSeries::with_missing(series.start_time, out, series.missing.clone())?;
    smoothed.interpolated = series.interpolated.clone();
    Ok(smoothed)
}

fn smooth_segment(x: &[f64], half: usize, out: &mut [f64]) {
    let n = x.len();
    // Shift by the first value so integer-valued data keeps exact sums even
    // for long segments.
    let shift = x[0];
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v - shift;
        prefix.push(acc);
    }
    for (t, o) in out.iter_mut().enumerate() {
        let lo = t.saturating_sub(half);
        let hi = (t + half + 1).min(n);
        *o = shift + (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
    }
}

/// `series − smoothed`, with masked indices of either input zeroed and
/// excluded.
pub fn residuals(series: &HeartRateSeries, smoothed: &HeartRateSeries) -> Result<ResidualSeries> {
    if series.len() != smoothed.len() {
        return Err(SeriesError::LengthMismatch {
            left: series.len(),
            right: smoothed.len(),
        });
    }
    let excluded = series.missing.union(&smoothed.missing);
    let flags = excluded.to_flags(series.len());
    let values = series
        .samples
        .iter()
        .zip(&smoothed.samples)
        .zip(&flags)
        .map(|((&x, &s), &skip)| if skip { 0.0 } else { x - s })
        .collect();
    Ok(ResidualSeries {
        values,
        excluded,
        source_smoothed: smoothed.clone(),
    })
}
