use copula_ci::engine::{hdi_interval, percentile_interval};
use copula_ci::special::std_normal_quantile;
use proptest::prelude::*;

/// Shortest window of `ceil(pct * n / 100)` order statistics, found by
/// scanning every start; ties go to the first.
fn brute_force_hdi(values: &[f64], pct: usize) -> (f64, f64) {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let m = (pct * n).div_ceil(100);
    let mut best = (x[0], x[m - 1]);
    for i in 0..=n - m {
        if x[i + m - 1] - x[i] < best.1 - best.0 {
            best = (x[i], x[i + m - 1]);
        }
    }
    best
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-1e3..1e3f64, 10..=1000),
        // Coarse values produce ties and equal-width windows.
        prop::collection::vec((0..50i32).prop_map(f64::from), 10..=1000),
        prop::collection::vec((0.0..1.0f64).prop_map(|u| (-u.ln()).powi(3)), 10..=1000),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hdi_matches_exhaustive_search(values in sample(), pct in prop::sample::select(vec![5usize, 28, 50, 80, 90, 95, 99])) {
        let got = hdi_interval(&values, pct as f64 / 100.0).unwrap();
        prop_assert_eq!(got, brute_force_hdi(&values, pct));
    }

    #[test]
    fn percentile_endpoints_bracket_mass(values in sample(), level in 0.5..0.99f64) {
        let (low, upp) = percentile_interval(&values, level).unwrap();
        let n = values.len() as f64;
        let tail = (1.0 - level) / 2.0;
        let below_low = values.iter().filter(|&&v| v < low).count() as f64 / n;
        let at_most_low = values.iter().filter(|&&v| v <= low).count() as f64 / n;
        prop_assert!(below_low <= tail + 1.0 / n && at_most_low >= tail - 1.0 / n);
        let above_upp = values.iter().filter(|&&v| v > upp).count() as f64 / n;
        let at_least_upp = values.iter().filter(|&&v| v >= upp).count() as f64 / n;
        prop_assert!(above_upp <= tail + 1.0 / n && at_least_upp >= tail - 1.0 / n);
    }
}

#[test]
fn interval_errors() {
    assert!(hdi_interval(&[], 0.9).is_err());
    assert!(hdi_interval(&[1.0], 0.9).is_err());
    assert!(percentile_interval(&[1.0], 0.9).is_err());
    assert!(percentile_interval(&[1.0, f64::NAN], 0.9).is_err());
    assert!(percentile_interval(&[1.0, 2.0], 1.0).is_err());
    assert_eq!(percentile_interval(&[3.0; 10], 0.9).unwrap(), (3.0, 3.0));
    assert_eq!(hdi_interval(&[3.0; 10], 0.9).unwrap(), (3.0, 3.0));
}

#[test]
fn hdi_no_wider_than_percentile_for_symmetric_sample() {
    // Normal quantiles at evenly spaced probabilities; with 10001 points both
    // 90% intervals span 9001 order statistics.
    let n = 10_001;
    let values: Vec<f64> = (0..n)
        .map(|i| std_normal_quantile((i as f64 + 0.5) / n as f64))
        .collect();
    let (hl, hu) = hdi_interval(&values, 0.9).unwrap();
    let (pl, pu) = percentile_interval(&values, 0.9).unwrap();
    assert!(hu - hl <= pu - pl, "{} vs {}", hu - hl, pu - pl);
    assert!((hu - hl - (pu - pl)).abs() < 1e-3);
}
