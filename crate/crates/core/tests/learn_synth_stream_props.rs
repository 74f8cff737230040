use cogload::learn::{
    classification_metrics, fit_linear_regression, leave_one_person_out, train_linear_svm, FeatureDataset, LinearModel,
    ModelKind, SvmParams, Targets, MODEL_FORMAT_VERSION,
};
use cogload::stream::{batch_decisions, replay_series, Difficulty, DifficultyController, Pipeline, StreamSession, WindowPolicy};
use cogload::synth::{gen_eeg, gen_nback_schedule, gen_pupil, match_rule, rng, Component, EegSynth, Envelope, PupilSynth};
use cogload::TimeSeries;
use proptest::prelude::*;
use rand::Rng;

fn confusion() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (2usize..6).prop_flat_map(|k| prop::collection::vec(prop::collection::vec(0usize..50, k), k))
}

fn blobs(seed: u64, persons: u32, per: usize) -> FeatureDataset {
    let mut r = rng(seed, 0);
    let (mut x, mut y, mut p, mut reps, mut c) = (vec![], vec![], vec![], vec![], vec![]);
    for person in 0..persons {
        for i in 0..per {
            let label = i % 2;
            let centre = if label == 0 { -2.0 } else { 2.0 };
            x.push((0..3).map(|_| centre + r.random_range(-1.0..1.0)).collect());
            y.push(label);
            p.push(person);
            reps.push(i as u32);
            c.push("a".to_string());
        }
    }
    FeatureDataset::new(x, Targets::Classes(y), p, reps, c).unwrap()
}

fn pupil_model() -> LinearModel {
    LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::SvmBinary,
        classes: vec![0, 1],
        weights: vec![vec![1.0]],
        biases: vec![-3.65],
        standardization: None,
        hyperparams: None,
        diagnostics: None,
    }
}

fn pupil(seed: u64) -> TimeSeries {
    let env = Envelope::Sine { freq_hz: 0.02 };
    gen_pupil(&PupilSynth { duration_s: 120.0, rate_hz: 30.0, seed, base_mm: 3.5, gain_mm: 0.3, noise_sigma_mm: 0.05, envelope: env }).unwrap()
}

proptest! {
    #[test]
    fn accuracy_is_trace_over_total(m in confusion()) {
        let total: usize = m.iter().flatten().sum();
        match classification_metrics(&m) {
            Ok(metrics) => {
                let trace: usize = (0..m.len()).map(|i| m[i][i]).sum();
                prop_assert_eq!(metrics.total, total);
                prop_assert_eq!(metrics.accuracy, trace as f64 / total as f64);
            }
            Err(_) => prop_assert_eq!(total, 0),
        }
    }

    #[test]
    fn training_r2_in_unit_interval(pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..100)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if let Ok(model) = fit_linear_regression(&x, &y) {
            let d = model.diagnostics.unwrap();
            prop_assert!((0.0..=1.0).contains(&d.r2));
            let ss: f64 = x.iter().zip(&y).map(|(a, b)| (b - d.slope * a - d.intercept).powi(2)).sum();
            prop_assert_eq!(d.rmse == 0.0, ss == 0.0);
        }
    }

    #[test]
    fn nback_rule_holds(n in 0usize..6, extra in 1usize..80, rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let s = gen_nback_schedule(n, n + extra, rate, seed).unwrap();
        prop_assert_eq!(&s.is_match, &match_rule(n, &s.stimuli));
        for i in 0..s.len() {
            let expected = n == 0 || (i >= n && s.stimuli[i] == s.stimuli[i - n]);
            prop_assert_eq!(s.is_match[i], expected);
        }
        if n > 0 {
            prop_assert_eq!(s.match_count(), (rate * extra as f64).round() as usize);
        }
    }

    #[test]
    fn difficulty_commands_alternate(labels in prop::collection::vec(0usize..2, 0..100), start_easy in any::<bool>()) {
        let initial = if start_easy { Difficulty::Easy } else { Difficulty::Difficult };
        let mut ctl = DifficultyController::new(1, initial, 5.0);
        for (w, &label) in labels.iter().enumerate() {
            let d = cogload::stream::Decision { window: w, start_s: w as f64 * 5.0, end_s: w as f64 * 5.0 + 5.0, features: vec![0.0], label };
            ctl.adapt(&d);
        }
        prop_assert!(ctl.commands.windows(2).all(|p| p[0].new_difficulty != p[1].new_difficulty));
        for c in &ctl.commands {
            let opposing = match c.triggering_label {
                cogload::stream::Workload::High => Difficulty::Easy,
                cogload::stream::Workload::Low => Difficulty::Difficult,
            };
            prop_assert_eq!(c.new_difficulty, opposing);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stream_partition_matches_batch(seed in 0u64..50, cuts in prop::collection::vec(1usize..900, 1..40)) {
        let rec = pupil(seed);
        let batch = batch_decisions(&Pipeline::PupilWindow, &WindowPolicy::pupil(), &pupil_model(), &rec).unwrap();
        let mut s = StreamSession::new(Pipeline::PupilWindow, WindowPolicy::pupil(), pupil_model(), 30.0, rec.channels().to_vec(), 0.0).unwrap();
        // every block must fit the buffer, so the cut pattern repeats
        let sizes: Vec<usize> = cuts.iter().copied().cycle().take(rec.n_samples()).collect();
        replay_series(&mut s, &rec, &sizes).unwrap();
        prop_assert_eq!(s.decisions().len(), batch.len());
        for (a, b) in s.decisions().iter().zip(&batch) {
            prop_assert_eq!(a.window, b.window);
            prop_assert_eq!(a.label, b.label);
            prop_assert_eq!(a.features[0].to_bits(), b.features[0].to_bits());
        }
        prop_assert!(s.decisions().windows(2).all(|w| w[0].end_s < w[1].end_s && w[1].window == w[0].window + 1));
    }

    #[test]
    fn seeded_training_is_reproducible(seed in any::<u64>()) {
        let ds = blobs(seed, 4, 12);
        let params = SvmParams { seed, ..SvmParams::default() };
        let trainer = |d: &FeatureDataset| train_linear_svm(d, &params);
        prop_assert_eq!(leave_one_person_out(&ds, trainer).unwrap(), leave_one_person_out(&ds, trainer).unwrap());
    }

    #[test]
    fn argmax_ignores_common_offset(seed in any::<u64>(), offset in -1e3f64..1e3) {
        let mut r = rng(seed, 1);
        let weights: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let biases: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let model = LinearModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: ModelKind::SvmOneVsRest,
            classes: vec![0, 1, 2, 3],
            weights: weights.clone(),
            biases: biases.clone(),
            standardization: None,
            hyperparams: None,
            diagnostics: None,
        };
        let shifted = LinearModel { biases: biases.iter().map(|b| b + offset).collect(), ..model.clone() };
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| r.random_range(-5.0..5.0)).collect();
            let scores = model.decision_scores(&x).unwrap();
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            // skip near-ties, where the offset's rounding decides
            if sorted[3] - sorted[2] > 1e-9 * offset.abs().max(1.0) {
                prop_assert_eq!(model.predict_class(&x).unwrap(), shifted.predict_class(&x).unwrap());
            }
        }
    }

    #[test]
    fn eeg_synthesis_reproducible_and_linear(seed in any::<u64>()) {
        let comp = |f: f64, amp: f64| Component { freq_hz: f, amplitude: amp, mixing: vec![1.0, 0.5], envelope: Envelope::Constant, phase_rad: Some(0.3 * f) };
        let spec = |components: Vec<Component>, noise: f64| EegSynth {
            duration_s: 4.0,
            rate_hz: 250.0,
            seed,
            channels: vec!["O1".into(), "O2".into()],
            noise_sigma: noise,
            components,
        };
        let both = gen_eeg(&spec(vec![comp(10.0, 2.0), comp(6.0, 1.0)], 0.0)).unwrap();
        prop_assert_eq!(&both, &gen_eeg(&spec(vec![comp(10.0, 2.0), comp(6.0, 1.0)], 0.0)).unwrap());
        let a = gen_eeg(&spec(vec![comp(10.0, 2.0)], 0.0)).unwrap();
        let b = gen_eeg(&spec(vec![comp(6.0, 1.0)], 0.0)).unwrap();
        for c in 0..2 {
            for k in 0..both.n_samples() {
                prop_assert!((both.data()[c][k] - a.data()[c][k] - b.data()[c][k]).abs() < 1e-12);
            }
        }
        let noisy = spec(vec![comp(10.0, 2.0)], 1.0);
        prop_assert_eq!(gen_eeg(&noisy).unwrap(), gen_eeg(&noisy).unwrap());
    }
}
