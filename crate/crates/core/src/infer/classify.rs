//! Gap/stickiness classification of whole activities.
//!
//! Heart rate is expected to cover a contiguous range of integer bpm values.
//! Values skipped above the athlete's threshold hint at a jump into a faster
//! rhythm; a reading frozen for a minute and a half means the strap stopped
//! sampling.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::series::HeartRateSeries;

/// Identical consecutive readings needed to call a recording sticky.
pub const STICKY_SECONDS: usize = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    Regular,
    Irregular,
    Unclear,
    CheckStrap,
}

pub(crate) fn is_sticky(series: &HeartRateSeries) -> bool {
    let mut run = 0usize;
    let mut last = f64::NAN;
    for (i, &v) in series.samples().iter().enumerate() {
        if series.is_missing(i) {
            run = 0;
            last = f64::NAN;
            continue;
        }
        run = if v == last { run + 1 } else { 1 };
        last = v;
        if run >= STICKY_SECONDS {
            return true;
        }
    }
    false
}

/// Most frequent rounded bpm; ties go to the higher value.
pub fn modal_hr(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for v in values.into_iter().filter(|v| v.is_finite()) {
        *counts.entry(v.round() as i64).or_default() += 1;
    }
    counts
        .into_iter()
        .fold(None::<(i64, u64)>, |best, (hr, n)| match best {
            Some((_, m)) if m > n => best,
            _ => Some((hr, n)),
        })
        .map(|(hr, _)| hr as f64)
}

/// Classifies one activity. The gap threshold is the larger of the modal
/// heart rate (the activity's own when `modal` is absent) and `lthr`.
pub fn classify_activity(
    series: &HeartRateSeries,
    lthr: Option<f64>,
    modal: Option<f64>,
) -> ActivityClass {
    if is_sticky(series) {
        return ActivityClass::CheckStrap;
    }
    let recorded = || {
        series
            .samples()
            .iter()
            .enumerate()
            .filter(|(i, v)| !series.is_missing(*i) && v.is_finite())
            .map(|(_, &v)| v)
    };
    let visited: BTreeSet<i64> = recorded().map(|v| v.round() as i64).collect();
    let (Some(&lo), Some(&hi)) = (visited.first(), visited.last()) else {
        return ActivityClass::Unclear;
    };
    let Some(modal) = modal.or_else(|| modal_hr(recorded())) else {
        return ActivityClass::Unclear;
    };
    let threshold = lthr.map_or(modal, |l| l.max(modal));
    // An unvisited value with a visited one further from the threshold.
    let high_gap = (threshold.ceil() as i64..hi).any(|h| !visited.contains(&h));
    let low_gap = (lo + 1..=threshold.floor() as i64).any(|h| !visited.contains(&h));
    match (high_gap, low_gap) {
        (false, false) => ActivityClass::Regular,
        (true, false) => ActivityClass::Irregular,
        _ => ActivityClass::Unclear,
    }
}

/// Percentage of Regular-or-Irregular activities that are Irregular.
pub fn irregular_ratio(classes: &[ActivityClass]) -> Option<f64> {
    let irregular = classes
        .iter()
        .filter(|&&c| c == ActivityClass::Irregular)
        .count();
    let regular = classes
        .iter()
        .filter(|&&c| c == ActivityClass::Regular)
        .count();
    let n = irregular + regular;
    (n > 0).then(|| 100.0 * irregular as f64 / n as f64)
}
