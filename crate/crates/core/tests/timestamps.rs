use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qcs_sim::timestamps::{
    self, apply_skew_compensation, correlate, cross_correlate, cross_correlate_dense, detect_pairs,
    generate_pair_events, run_instance, run_static_scenario, transmit_and_detect, ClockModel, Correlator,
    DetectorId, DetectorModel, Receiver, StaticScenario, TimestampSeries,
};

const BIN: f64 = 50e-12;

fn ideal_detector() -> DetectorModel {
    DetectorModel::new(1.0, 0.0, 0.0, BIN).unwrap()
}

fn receiver(id: DetectorId, loss_db: f64, detector: DetectorModel, clock: ClockModel, delay_s: f64) -> Receiver {
    Receiver { id, loss_db, detector, clock, delay_s }
}

/// A noiseless scenario where every instance should recover the offset.
fn noiseless(seed: u64) -> StaticScenario {
    let mut sc = StaticScenario::new(20.0, ideal_detector(), seed);
    sc.skew = 0.0;
    sc.acquisition_s = 0.01;
    sc
}

#[test]
fn pair_births_are_exponentially_spaced() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let rate = 1e5;
    let births = generate_pair_events(rate, 1.0, &mut rng).unwrap();
    let mut gaps: Vec<f64> = births.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(gaps.len() > 90_000);
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len() as f64;
    let d = gaps
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let cdf = 1.0 - (-rate * g).exp();
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    // asymptotic Kolmogorov critical value at alpha = 0.01
    let critical = 1.6276 / n.sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn pair_count_matches_poisson_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = generate_pair_events(1e7, 0.25, &mut rng).unwrap().len() as f64;
    let mean: f64 = 2.5e6;
    assert!((n - mean).abs() < 5.0 * mean.sqrt(), "{n}");
    assert!(generate_pair_events(1e7, 0.0, &mut rng).unwrap().is_empty());
}

#[test]
fn infinite_loss_leaves_dark_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let det = DetectorModel::new(0.5, 1000.0, 0.0, BIN).unwrap();
    let events = generate_pair_events(1e6, 2.0, &mut rng).unwrap();
    let r = receiver(DetectorId::B2, f64::INFINITY, det, ClockModel::ideal(), 0.0);
    let s = transmit_and_detect(&events, &r, 2.0, &mut rng).unwrap();
    let mean: f64 = 2000.0;
    assert!((s.len() as f64 - mean).abs() < 5.0 * mean.sqrt(), "{}", s.len());
    assert!(s.is_sorted());
}

#[test]
fn ideal_chain_stamps_births_plus_delay() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let events = generate_pair_events(1e4, 0.05, &mut rng).unwrap();
    let r = receiver(DetectorId::A2, 0.0, ideal_detector(), ClockModel::ideal(), 1e-3);
    let s = transmit_and_detect(&events, &r, 0.05, &mut rng).unwrap();
    let want: Vec<i64> = events
        .iter()
        .map(|t| ((t + 1e-3) / BIN).round() as i64)
        .filter(|&k| k <= (0.05 / BIN).round() as i64)
        .collect();
    assert_eq!(s.ticks, want);
}

#[test]
fn autocorrelation_peaks_at_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ticks: Vec<i64> = {
        let mut v: Vec<i64> = (0..2000).map(|_| rng.gen_range(0..10_000_000)).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let a = TimestampSeries::new(DetectorId::A1, BIN, 5e-4, ticks.clone());
    let b = TimestampSeries::new(DetectorId::A2, BIN, 5e-4, ticks.clone());
    let corr = Correlator::new(-200, 200, None).unwrap();
    let c = cross_correlate(&a, &b, &corr).unwrap();
    assert_eq!(c.peak_lag_ticks, 0);
    assert_eq!(c.peak_height as usize, ticks.len());
}

#[test]
fn empty_or_flat_inputs_have_no_peak() {
    let corr = Correlator::new(-10, 10, None).unwrap();
    let empty = TimestampSeries::new(DetectorId::A1, BIN, 1.0, vec![]);
    let one = TimestampSeries::new(DetectorId::B2, BIN, 1.0, vec![5]);
    assert!(matches!(cross_correlate(&empty, &one, &corr), Err(qcs_sim::QcsError::NoPeak(_))));
    assert!(matches!(correlate::analyse_histogram(&[4; 30]), Err(qcs_sim::QcsError::NoPeak(_))));
}

#[test]
fn two_way_peaks_for_known_delay_and_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let delay = 10e-3;
    let offset = 3e-9;
    let ta = 0.05;
    let clock_a = ClockModel::ideal();
    let clock_b = ClockModel::new(offset, 0.0);
    let d = ideal_detector();
    let corr = Correlator::from_seconds(delay - 2e-6, delay + 2e-6, BIN, None).unwrap();

    let births = generate_pair_events(1e5, ta, &mut rng).unwrap();
    let ab = detect_pairs(
        &births,
        &receiver(DetectorId::A1, 0.0, d, clock_a, 0.0),
        &receiver(DetectorId::B2, 10.0, d, clock_b, delay),
        ta,
        &mut rng,
    )
    .unwrap();
    let births = generate_pair_events(1e5, ta, &mut rng).unwrap();
    let ba = detect_pairs(
        &births,
        &receiver(DetectorId::B1, 0.0, d, clock_b, 0.0),
        &receiver(DetectorId::A2, 10.0, d, clock_a, delay),
        ta,
        &mut rng,
    )
    .unwrap();
    let c_ab = cross_correlate(&ab.local, &ab.remote, &corr).unwrap();
    let c_ba = cross_correlate(&ba.local, &ba.remote, &corr).unwrap();
    assert!((c_ab.peak_lag_s - (delay + offset)).abs() <= BIN / 2.0 + 1e-15);
    assert!((c_ba.peak_lag_s - (delay - offset)).abs() <= BIN / 2.0 + 1e-15);
    let est = timestamps::estimate_offset(&c_ab, &c_ba);
    assert!((est.delta_hat_s - offset).abs() <= BIN);
    assert!((est.roundtrip_hat_s - 2.0 * delay).abs() <= BIN);
}

#[test]
fn noiseless_offsets_recovered_within_a_bin() {
    let sc = noiseless(21);
    let mut sum = 0.0;
    for i in 0..100 {
        let o = run_instance(&sc, i).unwrap();
        let err = o.error_s().unwrap();
        assert!(err.abs() <= BIN, "instance {i}: {err}");
        sum += err;
    }
    assert!((sum / 100.0).abs() <= BIN / 2.0);
}

#[test]
fn symmetric_delay_moves_roundtrip_only() {
    let base = noiseless(22);
    let mut delayed = base.clone();
    delayed.propagation_delay_s = 2.5e-3;
    for i in 0..20 {
        let a = run_instance(&base, i).unwrap().estimate.unwrap();
        let b = run_instance(&delayed, i).unwrap().estimate.unwrap();
        assert!((a.delta_hat_s - b.delta_hat_s).abs() <= BIN);
        assert!((b.roundtrip_hat_s - a.roundtrip_hat_s - 5e-3).abs() <= 2.0 * BIN);
    }
}

#[test]
fn sparse_and_dense_correlators_agree() {
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let loss = rng.gen_range(0.0..10.0);
        let det = DetectorModel::new(0.5, rng.gen_range(0.0..2e4), rng.gen_range(0.0..300e-12), BIN).unwrap();
        let ta = rng.gen_range(2e-5..2e-4);
        let rate = rng.gen_range(1e6..2e7);
        let births = generate_pair_events(rate, ta, &mut rng).unwrap();
        let clock_b = ClockModel::new(rng.gen_range(0.0..1e-6), 3e-10);
        let det_pair = detect_pairs(
            &births,
            &receiver(DetectorId::A1, 0.0, det, ClockModel::ideal(), 0.0),
            &receiver(DetectorId::B2, loss, det, clock_b, 0.0),
            ta,
            &mut rng,
        )
        .unwrap();
        assert!(det_pair.local.len() + det_pair.remote.len() <= 20_000);
        let unfolded = Correlator::from_seconds(-2e-6, 2e-6, BIN, None).unwrap();
        let folded = Correlator::from_seconds(-2e-6, 2e-6, BIN, Some(ta / 3.3)).unwrap();
        for corr in [unfolded, folded] {
            let sparse = correlate::correlation_histogram(&det_pair.local.ticks, &det_pair.remote.ticks, &corr);
            let dense = correlate::correlation_histogram_dense(&det_pair.local.ticks, &det_pair.remote.ticks, &corr);
            assert_eq!(sparse, dense, "seed {seed}, frame {:?}", corr.frame_ticks);
            if let (Ok(a), Ok(b)) = (
                cross_correlate(&det_pair.local, &det_pair.remote, &corr),
                cross_correlate_dense(&det_pair.local, &det_pair.remote, &corr),
            ) {
                assert_eq!(a.peak_lag_ticks, b.peak_lag_ticks);
                assert_eq!(a.snr.to_bits(), b.snr.to_bits());
            }
        }
    }
}

/// Peak height of an exchange whose remote clock runs fast by `skew`. The
/// jitter spreads the peak over a few bins so a second rounding after
/// compensation does not split it.
fn skewed_peak(skew: f64, compensate: bool) -> u32 {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ta = 0.1;
    let births = generate_pair_events(2e5, ta, &mut rng).unwrap();
    let d = DetectorModel::with_jitter_sigma(1.0, 0.0, 100e-12, BIN).unwrap();
    let det = detect_pairs(
        &births,
        &receiver(DetectorId::A1, 0.0, d, ClockModel::ideal(), 0.0),
        &receiver(DetectorId::B2, 3.0, d, ClockModel::new(0.0, skew), 0.0),
        ta,
        &mut rng,
    )
    .unwrap();
    let remote = if compensate { apply_skew_compensation(&det.remote, skew, 0.0).unwrap() } else { det.remote };
    let corr = Correlator::from_seconds(-2e-6, 2e-6, BIN, None).unwrap();
    cross_correlate(&det.local, &remote, &corr).unwrap().peak_height
}

#[test]
fn compensating_the_true_skew_restores_the_peak() {
    let reference = skewed_peak(0.0, false);
    let smeared = skewed_peak(2e-8, false);
    let restored = skewed_peak(2e-8, true);
    assert!(smeared < reference / 2, "{smeared} vs {reference}");
    let rel = (f64::from(restored) - f64::from(reference)).abs() / f64::from(reference);
    assert!(rel <= 0.05, "{restored} vs {reference}");
}

#[test]
fn peak_height_falls_with_skew() {
    // drift over the acquisition doubles from 4 to 64 bins; finer steps sit
    // inside the counting noise of the peak bin
    let heights: Vec<u32> = [0.0, 2e-9, 4e-9, 8e-9, 1.6e-8, 3.2e-8].iter().map(|&s| skewed_peak(s, false)).collect();
    assert!(heights.windows(2).all(|w| w[1] <= w[0]), "{heights:?}");
}

#[test]
fn residual_skew_smears_about_one_bin() {
    // 2e-10 over 250 ms drifts by 50 ps
    assert!((2e-10 * 0.25 - BIN).abs() < 1e-15);
}

#[test]
fn zero_compensation_is_identity() {
    let s = TimestampSeries::new(DetectorId::B2, BIN, 1.0, vec![1, 5, 90, 1_000_000]);
    assert_eq!(apply_skew_compensation(&s, 0.0, 0.0).unwrap(), s);
    assert!(apply_skew_compensation(&s, 2e-6, 0.0).is_err());
}

#[test]
fn static_runs_are_deterministic() {
    let mut sc = StaticScenario::new(38.0, DetectorModel::default(), 9);
    sc.n_instances = 8;
    sc.acquisition_s = 0.05;
    let a = run_static_scenario(&sc).unwrap();
    let b = run_static_scenario(&sc).unwrap();
    assert_eq!(a.summary.record(), b.summary.record());
    assert_eq!(a.outcomes, b.outcomes);
}

#[test]
fn coincidence_rate_matches_loss_budget() {
    let mut sc = StaticScenario::new(36.0, DetectorModel::default(), 10);
    sc.n_instances = 10;
    let run = run_static_scenario(&sc).unwrap();
    let total: usize = run.outcomes.iter().map(|o| o.coincidences[0] + o.coincidences[1]).sum();
    let expected = sc.expected_ebit_rate(0) * sc.acquisition_s * 2.0 * sc.n_instances as f64;
    assert!((total as f64 - expected).abs() < 5.0 * expected.sqrt(), "{total} vs {expected}");
}

fn series_strategy() -> impl Strategy<Value = TimestampSeries> {
    (0u8..4, proptest::collection::vec(0i64..1 << 40, 0..300)).prop_map(|(code, mut ticks)| {
        ticks.sort_unstable();
        TimestampSeries::new(DetectorId::from_code(code).unwrap(), BIN, 0.25, ticks)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dump_round_trip(series in proptest::collection::vec(series_strategy(), 1..4)) {
        // one series per detector
        let mut seen = [false; 4];
        let series: Vec<TimestampSeries> = series
            .into_iter()
            .filter(|s| !std::mem::replace(&mut seen[s.detector.code() as usize], true))
            .collect();
        let refs: Vec<&TimestampSeries> = series.iter().collect();
        let mut buf = Vec::new();
        timestamps::write_dump(&mut buf, &refs).unwrap();
        let back = timestamps::read_dump(std::io::Cursor::new(buf)).unwrap();
        let mut want: Vec<TimestampSeries> = series.into_iter().filter(|s| !s.is_empty()).collect();
        want.sort_by_key(|s| s.detector.code());
        prop_assert_eq!(back, want);
    }

    #[test]
    fn widening_the_window_keeps_the_peak(seed in 0u64..1000, extra in 1i64..2000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ta = 2e-3;
        let births = generate_pair_events(2e6, ta, &mut rng).unwrap();
        let det = DetectorModel::new(0.5, 1e4, 100e-12, BIN).unwrap();
        let pair = detect_pairs(
            &births,
            &receiver(DetectorId::A1, 0.0, det, ClockModel::ideal(), 0.0),
            &receiver(DetectorId::B2, 6.0, det, ClockModel::new(rng.gen_range(0.0..1e-6), 0.0), 0.0),
            ta,
            &mut rng,
        ).unwrap();
        let narrow = Correlator::from_seconds(-2e-6, 2e-6, BIN, None).unwrap();
        let wide = Correlator::new(narrow.lag_min - extra, narrow.lag_max + extra, None).unwrap();
        let a = cross_correlate(&pair.local, &pair.remote, &narrow).unwrap();
        let b = cross_correlate(&pair.local, &pair.remote, &wide).unwrap();
        prop_assert_eq!(a.peak_lag_ticks, b.peak_lag_ticks);
        prop_assert_eq!(a.peak_height, b.peak_height);
    }

    #[test]
    fn clock_reading_inverts(offset in 0.0..1e-6f64, skew in -1e-9..1e-9f64, epoch in 0.0..1.0f64, t in 0.0..1.0f64) {
        let c = ClockModel { offset_s: offset, skew, epoch_s: epoch };
        prop_assert!((c.true_time(c.read(t)) - t).abs() < 1e-15);
    }

    #[test]
    fn quantization_within_half_bin(t in 0.0..1.0f64) {
        let d = DetectorModel::default();
        let k = d.quantize(t);
        prop_assert!((k as f64 * d.resolution_s - t).abs() <= d.resolution_s / 2.0 + 1e-15);
    }
}
