use hrv_affect::hrv::{compute_features, rr_statistics, successive_differences, BeatSeries, FEATURE_COUNT};
use proptest::prelude::*;

fn peaks_from_rr(start: usize, rr_ms: &[usize]) -> Vec<usize> {
    let mut p = vec![start];
    for r in rr_ms {
        p.push(p.last().unwrap() + r);
    }
    p
}

proptest! {
    #[test]
    fn poincare_identities(rr in proptest::collection::vec(300.0f64..2000.0, 5..100)) {
        let f = rr_statistics(&rr, &successive_differences(&rr), None);
        prop_assert!((f.sd1 - f.rmssd / 2f64.sqrt()).abs() <= 1e-9 * f.rmssd.max(1.0));
        // the sd2 clamp only engages for strongly alternating series
        prop_assume!(2.0 * f.sdnn * f.sdnn >= 0.5 * f.rmssd * f.rmssd);
        let lhs = f.sd1 * f.sd1 + f.sd2 * f.sd2;
        let rhs = 2.0 * f.sdnn * f.sdnn;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn shifting_peaks_changes_nothing(rr in proptest::collection::vec(300usize..2000, 5..40), shift in 1usize..5000) {
        let a = compute_features(&BeatSeries::from_peaks(peaks_from_rr(0, &rr), 1000.0), 1000.0).unwrap();
        let b = compute_features(&BeatSeries::from_peaks(peaks_from_rr(shift, &rr), 1000.0), 1000.0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn features_are_finite_and_bounded(rr in proptest::collection::vec(300.0f64..2000.0, 5..100)) {
        let f = rr_statistics(&rr, &successive_differences(&rr), None);
        let v = f.values();
        prop_assert_eq!(v.len(), FEATURE_COUNT);
        for x in v.iter().flatten() {
            prop_assert!(x.is_finite() && *x >= 0.0);
        }
        prop_assert!((0.0..=1.0).contains(&f.pnn20) && (0.0..=1.0).contains(&f.pnn50));
        prop_assert!(f.pnn50 <= f.pnn20);
        prop_assert!((30.0..=200.0).contains(&f.bpm));
    }
}

#[test]
fn alternating_series_engages_the_clamp() {
    let rr = [800.0, 900.0, 800.0, 900.0, 800.0];
    let f = rr_statistics(&rr, &successive_differences(&rr), None);
    assert!(2.0 * f.sdnn * f.sdnn < 0.5 * f.rmssd * f.rmssd);
    assert_eq!(f.sd2, 0.0);
    assert_eq!(f.sd1_sd2, None);
}
