#![allow(dead_code)]

use hrspike::detect::Spike;
use hrspike::infer::{ActivityRecord, AthleteRecord};
use hrspike::simulate::{simulate_activity, RateFunction, Scenario, ScenarioConfig};
use hrspike::HeartRateSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub const SMOOTHING_WIDTH: usize = 200;

/// An athlete made of one-hour interval sessions whose ground-truth spikes
/// serve as the detections. The monitor noise is kept high enough that the
/// rounded series never reads as sticky.
pub fn simulated_athlete(
    id: &str,
    label: bool,
    rate: &RateFunction,
    hours: usize,
    seed: u64,
) -> AthleteRecord {
    let activities = (0..hours)
        .map(|k| {
            let mut cfg = ScenarioConfig {
                scenario: Scenario::IntervalTraining,
                spike_rate: rate.clone(),
                seed: seed.wrapping_mul(1_000_003).wrapping_add(k as u64),
                ..ScenarioConfig::default()
            };
            cfg.noise.beta_quiet = cfg.noise.beta_noisy;
            let a = simulate_activity(&cfg).expect("valid scenario");
            ActivityRecord::new(a.series, a.truth, SMOOTHING_WIDTH).expect("valid series")
        })
        .collect();
    AthleteRecord::new(id, label, activities)
}

/// A non-sticky hour at a fixed heart rate band.
pub fn wobbling_series(level: f64, seconds: usize) -> HeartRateSeries {
    let samples = (0..seconds).map(|i| level + (i % 4) as f64).collect();
    HeartRateSeries::new(0.0, samples).unwrap()
}

/// Hand-built athlete: `hours` one-hour sessions, with spike base heart rates
/// given per spike and spike times spread over the sessions.
pub fn athlete_with_spikes(id: &str, label: bool, hours: usize, base_hrs: &[f64]) -> AthleteRecord {
    let per = base_hrs.len().div_ceil(hours.max(1)).max(1);
    let activities = (0..hours)
        .map(|k| {
            let spikes: Vec<Spike> = base_hrs
                .iter()
                .skip(k * per)
                .take(per)
                .enumerate()
                .map(|(j, &b)| Spike::new(30.0 + 3500.0 * j as f64 / per as f64, 12.0, b))
                .collect();
            ActivityRecord::new(wobbling_series(140.0, 3600), spikes, 51).unwrap()
        })
        .collect();
    AthleteRecord::new(id, label, activities)
}

/// Synthetic cohort of `n` athletes, a third of them labelled. Background
/// spikes ride on 100–160 bpm at a rate that varies between athletes
/// (uniform on 0–3 per hour); labelled athletes add `extra_rate` per hour of
/// spikes on 150–190 bpm.
pub fn label_linked_cohort(
    n: usize,
    hours: usize,
    extra_rate: f64,
    seed: u64,
) -> Vec<AthleteRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = |rng: &mut ChaCha8Rng, rate: f64| {
        if rate > 0.0 {
            Poisson::new(rate * hours as f64).unwrap().sample(rng) as usize
        } else {
            0
        }
    };
    (0..n)
        .map(|i| {
            let label = i % 3 == 0;
            let background_rate = rng.random_range(0.0..3.0);
            let background = count(&mut rng, background_rate);
            let mut hrs: Vec<f64> = (0..background)
                .map(|_| rng.random_range(100.0..160.0))
                .collect();
            if label {
                let extra = count(&mut rng, extra_rate);
                hrs.extend((0..extra).map(|_| rng.random_range(150.0..190.0)));
            }
            athlete_with_spikes(&format!("a{i:03}"), label, hours, &hrs)
        })
        .collect()
}

/// Every matching within the window, as `(detected, truth)` pairs.
pub fn all_matchings(truth: &[f64], det: &[f64], window: f64) -> Vec<Vec<(usize, usize)>> {
    type Matching = Vec<(usize, usize)>;
    fn go(
        d: usize,
        truth: &[f64],
        det: &[f64],
        w: f64,
        used: &mut [bool],
        cur: &mut Matching,
        out: &mut Vec<Matching>,
    ) {
        if d == det.len() {
            out.push(cur.clone());
            return;
        }
        go(d + 1, truth, det, w, used, cur, out);
        for t in 0..truth.len() {
            if !used[t] && (truth[t] - det[d]).abs() <= w {
                used[t] = true;
                cur.push((d, t));
                go(d + 1, truth, det, w, used, cur, out);
                cur.pop();
                used[t] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(
        0,
        truth,
        det,
        window,
        &mut vec![false; truth.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Whether `m` is what the scan would pick: detections in time order each
/// take the nearest free truth spike, earlier on ties, whenever one is in
/// reach.
pub fn greedy_feasible(m: &[(usize, usize)], truth: &[f64], det: &[f64], window: f64) -> bool {
    let mut order: Vec<usize> = (0..det.len()).collect();
    order.sort_by(|&a, &b| det[a].total_cmp(&det[b]).then(a.cmp(&b)));
    let mut used = vec![false; truth.len()];
    for d in order {
        let chosen = m.iter().find(|p| p.0 == d).map(|p| p.1);
        let free: Vec<usize> = (0..truth.len())
            .filter(|&t| !used[t] && (truth[t] - det[d]).abs() <= window)
            .collect();
        match chosen {
            None if !free.is_empty() => return false,
            None => {}
            Some(t) => {
                let dist = (truth[t] - det[d]).abs();
                let better = free.iter().any(|&u| {
                    let du = (truth[u] - det[d]).abs();
                    du < dist || (du == dist && (truth[u], u) < (truth[t], t))
                });
                if better {
                    return false;
                }
                used[t] = true;
            }
        }
    }
    true
}
