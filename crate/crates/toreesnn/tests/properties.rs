//! Property tests for the spec-level invariants that hold over whole input
//! domains rather than hand-picked cases.

use proptest::prelude::*;

use toreesnn::errclass::classify_error;
use toreesnn::nn::{mse, parse_network, write_network, Activation, DenseLayer, Network};
use toreesnn::reesnn::reesnn_input;
use toreesnn::series::{denormalize, normalize, SeriesOrigin, TimeSeries};
use toreesnn::taylor::{taylor_correct, CorrectionConfig};

fn finite_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e6..1e6f64, 2..64)
}

proptest! {
    #[test]
    fn normalize_denormalize_round_trips(values in finite_series()) {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(max - min > 1e-9);

        let s = TimeSeries::new(values.clone(), 1.0, SeriesOrigin::External).unwrap();
        let n = normalize(&s).unwrap();
        // Rounding in the affine map is a few ulps at series scale, so the
        // round trip is 1e-12-relative at scale always, and 1e-12-relative
        // per sample once the sample is not vanishing against the scale.
        let scale = min.abs().max(max.abs());
        for (&orig, &scaled) in values.iter().zip(n.values()) {
            prop_assert!((0.0..=1.0).contains(&scaled));
            let back = denormalize(&n, scaled).unwrap();
            let err = (back - orig).abs();
            prop_assert!(err <= 1e-12 * scale, "{orig} came back as {back}");
            if orig.abs() >= 1e-2 * scale {
                prop_assert!(err <= 1e-12 * orig.abs(), "{orig} came back as {back}");
            }
        }
    }

    #[test]
    fn normalization_preserves_order(values in finite_series()) {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(max - min > 1e-9);

        let s = TimeSeries::new(values.clone(), 1.0, SeriesOrigin::External).unwrap();
        let n = normalize(&s).unwrap();
        for (a, b) in values.windows(2).map(|w| (w[0], w[1])).zip(n.values().windows(2).map(|w| (w[0], w[1]))) {
            prop_assert_eq!(a.0 < a.1, b.0 < b.1);
        }
    }

    #[test]
    fn classify_error_is_antisymmetric(e in -10.0..10.0f64, delta in 1e-6..5.0f64) {
        prop_assert_eq!(
            classify_error(-e, delta).unwrap(),
            -classify_error(e, delta).unwrap()
        );
    }

    #[test]
    fn growing_delta_only_shrinks_class_magnitude(
        e in -10.0..10.0f64,
        d1 in 1e-6..5.0f64,
        bump in 0.0..5.0f64,
    ) {
        let c1 = classify_error(e, d1).unwrap();
        let c2 = classify_error(e, d1 + bump).unwrap();
        prop_assert!(c2.abs() <= c1.abs());
    }

    #[test]
    fn taylor_correction_is_additive(
        raw in 0.0..1.0f64,
        a in -0.5..0.5f64,
        b in -0.5..0.5f64,
        dt in 0.1..4.0f64,
    ) {
        let cfg = CorrectionConfig::new(dt).unwrap();
        let joint = taylor_correct(raw, a + b, &cfg).unwrap();
        prop_assert!((joint - (raw + (a + b) * dt)).abs() < 1e-12);
        prop_assert_eq!(taylor_correct(raw, 0.0, &cfg).unwrap(), raw);
    }

    #[test]
    fn mse_is_zero_iff_equal(values in prop::collection::vec(-10.0..10.0f64, 1..32), bump in 0.001..1.0f64) {
        prop_assert_eq!(mse(&values, &values).unwrap(), 0.0);
        let mut shifted = values.clone();
        shifted[0] += bump;
        prop_assert!(mse(&values, &shifted).unwrap() > 0.0);
    }

    #[test]
    fn reesnn_input_is_forecasts_then_errors(
        y in prop::collection::vec(-1.0..1.0f64, 1..12),
        e_seed in -1.0..1.0f64,
    ) {
        let e: Vec<f64> = y.iter().map(|v| v * e_seed).collect();
        let input = reesnn_input(&y, &e).unwrap();
        prop_assert_eq!(&input[..y.len()], &y[..]);
        prop_assert_eq!(&input[y.len()..], &e[..]);
    }

    #[test]
    fn network_serialization_is_bit_exact(
        seed in any::<u64>(),
        widths in prop::collection::vec(1..8usize, 2..4),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let sigmoid = Activation::sigmoid(1.0).unwrap();
        let layers: Vec<DenseLayer> = widths
            .windows(2)
            .map(|w| DenseLayer::random(w[0], w[1], sigmoid, &mut rng).unwrap())
            .collect();
        let net = Network::new(layers).unwrap();
        let text = write_network(&net);
        let parsed = parse_network(&text).unwrap();
        prop_assert_eq!(&parsed, &net);
        prop_assert_eq!(write_network(&parsed), text);
    }
}
