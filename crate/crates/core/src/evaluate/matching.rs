use serde::{Deserialize, Serialize};

use crate::detect::Spike;

/// Default pairing window, seconds.
pub const MATCH_WINDOW: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
}

/// Pairs of `(detected index, truth index)` chosen by the greedy scan.
///
/// Detected spikes are visited in time order; each takes the nearest truth
/// spike within `window` that has not been taken yet, preferring the earlier
/// truth spike on equal distance.
pub fn greedy_pairs(truth: &[Spike], detected: &[Spike], window: f64) -> Vec<(usize, usize)> {
    let mut truth_order: Vec<usize> = (0..truth.len()).collect();
    truth_order.sort_by(|&a, &b| truth[a].time.total_cmp(&truth[b].time).then(a.cmp(&b)));
    let times: Vec<f64> = truth_order.iter().map(|&i| truth[i].time).collect();
    let mut det_order: Vec<usize> = (0..detected.len()).collect();
    det_order.sort_by(|&a, &b| {
        detected[a]
            .time
            .total_cmp(&detected[b].time)
            .then(a.cmp(&b))
    });

    let mut taken = vec![false; truth.len()];
    let mut pairs = Vec::new();
    for d in det_order {
        let t = detected[d].time;
        let lo = times.partition_point(|&x| x < t - window);
        let mut best: Option<(f64, usize)> = None;
        for k in lo..times.len() {
            let dist = (times[k] - t).abs();
            if times[k] > t + window {
                break;
            }
            if taken[k] || dist > window {
                continue;
            }
            if best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, k));
            }
        }
        if let Some((_, k)) = best {
            taken[k] = true;
            pairs.push((d, truth_order[k]));
        }
    }
    pairs
}

/// Precision, recall and F1 from counts. Both lists empty scores 1; exactly
/// one empty list scores 0.
pub fn score_from_counts(matched: usize, n_truth: usize, n_detected: usize) -> MatchScore {
    if n_truth == 0 && n_detected == 0 {
        return MatchScore {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            matched,
        };
    }
    let precision = if n_detected == 0 {
        0.0
    } else {
        matched as f64 / n_detected as f64
    };
    let recall = if n_truth == 0 {
        0.0
    } else {
        matched as f64 / n_truth as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    MatchScore {
        precision,
        recall,
        f1,
        matched,
    }
}

/// Windowed F1 of `detected` against `truth` using [`greedy_pairs`].
pub fn match_f1(truth: &[Spike], detected: &[Spike], window: f64) -> MatchScore {
    let matched = greedy_pairs(truth, detected, window).len();
    score_from_counts(matched, truth.len(), detected.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(times: &[f64]) -> Vec<Spike> {
        times.iter().map(|&t| Spike::new(t, 10.0, 150.0)).collect()
    }

    #[test]
    fn identical_lists_score_one() {
        let s = at(&[3.0, 40.0, 41.0, 900.0]);
        let m = match_f1(&s, &s, MATCH_WINDOW);
        assert_eq!((m.precision, m.recall, m.f1, m.matched), (1.0, 1.0, 1.0, 4));
    }

    #[test]
    fn degenerate_counts() {
        let s = at(&[10.0]);
        assert_eq!(match_f1(&s, &[], MATCH_WINDOW).f1, 0.0);
        assert_eq!(match_f1(&s, &[], MATCH_WINDOW).precision, 0.0);
        assert_eq!(match_f1(&[], &s, MATCH_WINDOW).f1, 0.0);
        assert_eq!(match_f1(&[], &[], MATCH_WINDOW).f1, 1.0);
    }

    #[test]
    fn window_is_inclusive_and_strict_beyond() {
        assert_eq!(match_f1(&at(&[10.0]), &at(&[15.0]), 5.0).matched, 1);
        assert_eq!(match_f1(&at(&[10.0]), &at(&[15.5]), 5.0).matched, 0);
    }

    #[test]
    fn nearest_then_earlier() {
        // Detected at 10 is equidistant from 8 and 12: takes 8.
        let pairs = greedy_pairs(&at(&[8.0, 12.0]), &at(&[10.0]), 5.0);
        assert_eq!(pairs, vec![(0, 0)]);
        // A consumed truth spike is not reused.
        let pairs = greedy_pairs(&at(&[10.0]), &at(&[9.0, 11.0]), 5.0);
        assert_eq!(pairs, vec![(0, 0)]);
    }

    #[test]
    fn greedy_can_be_suboptimal() {
        // Detected 4 takes truth 6 (nearest), leaving detected 9 unmatched,
        // whereas 4→1 and 9→6 would pair both.
        let truth = at(&[1.0, 6.0]);
        let det = at(&[4.0, 9.0]);
        let m = match_f1(&truth, &det, 3.0);
        assert_eq!(m.matched, 1);
    }

    #[test]
    fn harmonic_mean() {
        let m = match_f1(&at(&[0.0, 100.0, 200.0, 300.0]), &at(&[1.0, 101.0]), 5.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 0.5);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    }
}
