mod common;

use common::{athlete_with_spikes, label_linked_cohort, simulated_athlete};
use hrspike::infer::{
    outlier_filter, point_biserial, poisson_rate, summarize_cohort, threshold_sweep, AthleteSummary,
};
use hrspike::simulate::RateFunction;

fn correlation(summaries: &[AthleteSummary]) -> f64 {
    let rates: Vec<f64> = summaries.iter().map(|s| s.lambda_hat).collect();
    let labels: Vec<bool> = summaries.iter().map(|s| s.label).collect();
    point_biserial(&rates, &labels).unwrap().r
}

#[test]
fn homogeneous_rate_estimate_covers_truth() {
    // 0.5/h over 800 h gives 400 expected spikes; ±0.05/h is 2.5 sd.
    let rate = RateFunction::constant(0.5);
    let seeds = 100;
    let inside = (0..seeds)
        .filter(|&seed| {
            let a = simulated_athlete("h", false, &rate, 800, seed);
            assert_eq!(a.hours(), 800.0);
            (0.45..=0.55).contains(&poisson_rate(&a).unwrap())
        })
        .count();
    assert!(inside as f64 >= 0.95 * seeds as f64, "{inside}/{seeds}");
}

#[test]
fn sweep_rises_through_label_linked_band() {
    let cohort = label_linked_cohort(150, 40, 1.0, 3);
    let grid: Vec<f64> = (0..=6).map(|i| 130.0 + 5.0 * i as f64).collect();
    let points = threshold_sweep(&cohort, &grid).unwrap();
    for w in points.windows(2) {
        assert!(w[1].r.unwrap() > w[0].r.unwrap(), "{w:?}");
    }
    let base = threshold_sweep(&cohort, &[0.0]).unwrap()[0];
    assert!(points[6].r.unwrap() > base.r.unwrap());
}

#[test]
fn planted_outliers_mask_the_association() {
    let mut cohort = label_linked_cohort(98, 20, 1.0, 5);
    for id in ["o1", "o2"] {
        cohort.push(athlete_with_spikes(id, false, 20, &vec![120.0; 600]));
    }
    let summaries = summarize_cohort(&cohort, &hrspike::infer::default_bin_edges()).unwrap();
    let kept = outlier_filter(&summaries, 98.0).unwrap();
    assert!(kept.iter().all(|s| !s.athlete_id.starts_with('o')));
    assert!(correlation(&kept) > correlation(&summaries));
}

#[test]
fn hand_built_rate_is_exact() {
    let a = athlete_with_spikes("x", true, 5, &[150.0; 10]);
    assert_eq!(poisson_rate(&a).unwrap(), 2.0);
    let b = athlete_with_spikes("y", true, 3, &[150.0; 7]);
    assert_eq!(poisson_rate(&b).unwrap(), 7.0 / 3.0);
}
