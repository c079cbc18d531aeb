use kmexp_core::sample::{censoring_km_weights, km_weights};
use kmexp_core::CensoredSample;
use proptest::prelude::*;

/// Times on a coarse grid half of the time so that ties are common.
fn censored_data() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40, any::<bool>()).prop_flat_map(|(n, coarse)| {
        let time = (0.01f64..10.0).prop_map(move |t| if coarse { (t * 2.0).ceil() / 2.0 } else { t });
        (
            prop::collection::vec(time, n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn jumps_are_a_probability_vector((times, events) in censored_data()) {
        let w = km_weights(&times, &events);
        let mass: f64 = w.jumps().iter().sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12, "mass {mass}");
        let n = w.len();
        for (j, (&d, &m)) in w.ordered_indicators().iter().zip(w.jumps()).enumerate() {
            prop_assert!(m >= 0.0);
            if !d && j + 1 < n {
                prop_assert_eq!(m, 0.0);
            }
        }
    }

    #[test]
    fn jumps_are_survival_decrements((times, events) in censored_data()) {
        let w = km_weights(&times, &events);
        let s = w.survival_steps();
        let mut prev = 1.0;
        for j in 0..w.len() - 1 {
            prop_assert!(s[j] <= prev);
            prop_assert!((w.jumps()[j] - (prev - s[j])).abs() <= 1e-14);
            prev = s[j];
        }
        prop_assert!((w.jumps()[w.len() - 1] - prev).abs() <= 1e-15);
    }

    #[test]
    fn survival_function_is_nonincreasing((times, events) in censored_data()) {
        let w = km_weights(&times, &events);
        let mut prev = 1.0;
        for k in 0..=220 {
            let s = w.survival_at(k as f64 * 0.05);
            prop_assert!(s <= prev && (0.0..=1.0).contains(&s));
            prev = s;
        }
    }

    #[test]
    fn complete_samples_weigh_each_point_equally(times in prop::collection::vec(0.01f64..10.0, 2..200)) {
        let n = times.len();
        let w = km_weights(&times, &vec![true; n]);
        for &m in w.jumps() {
            prop_assert_eq!(m, 1.0 / n as f64);
        }
        // survival equals the empirical survival function
        for &t in &times {
            let above = times.iter().filter(|&&x| x > t).count() as f64 / n as f64;
            prop_assert!((w.survival_at(t + 1e-9) - above).abs() <= 1e-12);
        }
    }

    #[test]
    fn jumps_do_not_depend_on_the_time_unit((times, events) in censored_data(), c in 1e-3f64..1e3) {
        let w = km_weights(&times, &events);
        let scaled: Vec<f64> = times.iter().map(|t| t * c).collect();
        let v = km_weights(&scaled, &events);
        prop_assert_eq!(w.jumps(), v.jumps());
        prop_assert_eq!(w.ordered_indicators(), v.ordered_indicators());
    }

    #[test]
    fn censoring_estimate_is_a_probability_vector((times, mut events) in censored_data()) {
        events[0] = false;
        let s = CensoredSample::new(times, events).unwrap();
        let w = censoring_km_weights(&s).unwrap();
        let mass: f64 = w.jumps().iter().sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn all_censored_data_gives_uniform_censoring_weights() {
    let s = CensoredSample::new(vec![1.0, 2.0], vec![false, false]).unwrap();
    let w = censoring_km_weights(&s).unwrap();
    assert_eq!(w.jumps(), &[0.5, 0.5]);
}

#[test]
fn uncensored_data_has_no_censoring_estimate() {
    let s = CensoredSample::new(vec![1.0, 2.0], vec![true, true]).unwrap();
    assert!(censoring_km_weights(&s).is_err());
}
