use cogload::eeg::{count_blinks, iaf_course, normalize_course, BlinkParams, EegParams, PowerCourse};
use cogload::gaze::{deviation_points, normalize_deviation, smooth_running_mean, Normalization};
use cogload::signal::{Channel, TimeSeries};
use cogload::spectral::BandSpec;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-2000.0f64..2000.0, -2000.0f64..2000.0).prop_map(|(x, y)| [x, y])
}

fn traces() -> impl Strategy<Value = (Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    (1usize..200).prop_flat_map(|n| (prop::collection::vec(point(), n), prop::collection::vec(point(), n)))
}

fn course(values: Vec<f64>) -> PowerCourse<f64> {
    let n = values.len();
    PowerCourse { values, frame_times_s: (0..n).map(|i| i as f64 * 0.5).collect(), band: BandSpec::theta(), normalized: false }
}

proptest! {
    #[test]
    fn deviation_symmetric_and_zero_only_on_identity((a, b) in traces()) {
        let ab = deviation_points(&a, &b).unwrap();
        prop_assert_eq!(&ab, &deviation_points(&b, &a).unwrap());
        for (k, d) in ab.iter().enumerate() {
            prop_assert_eq!(*d == 0.0, a[k] == b[k]);
        }
        prop_assert!(deviation_points(&a, &a).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn deviation_translation_invariant((a, b) in traces(), off in point()) {
        let shift = |t: &[[f64; 2]]| t.iter().map(|p| [p[0] + off[0], p[1] + off[1]]).collect::<Vec<_>>();
        let before = deviation_points(&a, &b).unwrap();
        let after = deviation_points(&shift(&a), &shift(&b)).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0));
        }
    }

    #[test]
    fn normalized_maximum_is_one(devs in prop::collection::vec(0.0f64..1e4, 1..500)) {
        let out = normalize_deviation(&devs, Normalization::PerTrialMax).unwrap();
        if devs.iter().any(|&d| d > 0.0) {
            prop_assert_eq!(out.iter().copied().fold(0.0, f64::max), 1.0);
        } else {
            prop_assert!(out.iter().all(|&v| v == 0.0));
        }
        prop_assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn normalize_then_smooth_cancels_scale(devs in prop::collection::vec(0.0f64..1e3, 60..400), k in 1e-3f64..1e3, w in 1usize..50, h in 1usize..5) {
        let scaled: Vec<f64> = devs.iter().map(|d| d * k).collect();
        let a = smooth_running_mean(&normalize_deviation(&devs, Normalization::PerTrialMax).unwrap(), w, h).unwrap();
        let b = smooth_running_mean(&normalize_deviation(&scaled, Normalization::PerTrialMax).unwrap(), w, h).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalize_course_scale_free(values in prop::collection::vec(0.01f64..100.0, 1..50), base in prop::collection::vec(0.01f64..100.0, 1..50), k in 1e-3f64..1e3) {
        let plain = normalize_course(&course(values.clone()), &course(base.clone())).unwrap();
        let scaled = normalize_course(&course(values.iter().map(|v| v * k).collect()), &course(base.iter().map(|v| v * k).collect())).unwrap();
        for (x, y) in plain.values.iter().zip(&scaled.values) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn blinks_ignore_polarity(spikes in prop::collection::vec((0usize..7000, 1usize..20, 150.0f64..600.0), 0..30)) {
        let mut x = vec![0.0; 7500];
        for (at, len, amp) in spikes {
            x[at..at + len].iter_mut().for_each(|v| *v = amp);
        }
        let chans = vec![Channel::new("Fp1", "uV"), Channel::new("Fp2", "uV")];
        let s = TimeSeries::new(250.0, chans, vec![x.clone(), x], 0.0).unwrap();
        let neg = s.map_rows(|r| Ok(r.iter().map(|v| -v).collect())).unwrap();
        let p = BlinkParams::default();
        let (a, b) = (count_blinks(&s, &p).unwrap(), count_blinks(&neg, &p).unwrap());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.per_minute, a.count as f64 / (a.duration_s / 60.0));
        prop_assert!(a.blink_times_s.windows(2).all(|w| w[1] - w[0] >= p.refractory_s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn iaf_course_is_deterministic(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3000), 2)) {
        let chans = vec![Channel::new("O1", "uV"), Channel::new("O2", "uV")];
        let s = TimeSeries::new(250.0, chans, rows, 0.0).unwrap();
        let band = BandSpec::around(10.0, 2.0).unwrap();
        let a = iaf_course(&s, &band, &["O1", "O2"], &EegParams::default()).unwrap();
        let b = iaf_course(&s, &band, &["O1", "O2"], &EegParams::default()).unwrap();
        prop_assert_eq!(a.values.len(), a.frame_times_s.len());
        prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
