use anoma::model::{build_correlation, build_error_matrices, FrameConfig, LinkConfig, TimingError};
use anoma::throughput::{roots, throughput_asymptotic, throughput_closed, throughput_matrix, throughput_noma};
use anoma::timing::{throughput_loss, throughput_with_error};
use anoma::waveform::{algebraic_outputs, generate_symbols, matched_filter_outputs, Constellation};
use proptest::prelude::*;

fn mu() -> impl Strategy<Value = f64> {
    (-2.0f64..2.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn roots_are_ordered_and_satisfy_vieta(mu1 in mu(), mu2 in mu(), tau in 0.001f64..0.999) {
        let r = roots(mu1, mu2, tau).unwrap();
        let a = 1.0 / mu1 + 1.0 / mu2 + 1.0 / (mu1 * mu2);
        let t = tau * (1.0 - tau);
        prop_assert!(r.r1 > r.r2 && r.r2 > 0.0);
        prop_assert!((r.sum() - (a + 2.0 * t)).abs() <= 1e-12 * r.sum());
        prop_assert!((r.product() - t * t).abs() <= 1e-12 * t * t);
    }

    #[test]
    fn correlation_is_symmetric_positive_definite(n in 1usize..40, tau in 0.001f64..0.999) {
        let r = build_correlation(&FrameConfig::new(n, tau).unwrap()).unwrap();
        prop_assert!(r.band().is_symmetric());
        prop_assert!(r.band().cholesky("R").is_ok());
    }

    #[test]
    fn closed_form_tracks_log_det(mu1 in mu(), mu2 in mu(), tau in 0.0f64..0.999, n in 1usize..80) {
        let link = LinkConfig::from_snr(mu1, mu2).unwrap();
        let frame = FrameConfig::new(n, tau).unwrap();
        let a = throughput_closed(&link, &frame).unwrap();
        let b = throughput_matrix(&link, &frame).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b.abs());
    }

    #[test]
    fn asymptote_beats_noma(mu1 in mu(), mu2 in mu(), tau in 0.01f64..0.99) {
        prop_assert!(throughput_asymptotic(mu1, mu2, tau).unwrap() > throughput_noma(mu1, mu2));
    }

    #[test]
    fn throughput_grows_with_snr(mu1 in mu(), mu2 in mu(), tau in 0.0f64..0.999, n in 1usize..50, k in 1.01f64..3.0) {
        let frame = FrameConfig::new(n, tau).unwrap();
        let base = throughput_closed(&LinkConfig::from_snr(mu1, mu2).unwrap(), &frame).unwrap();
        prop_assert!(throughput_closed(&LinkConfig::from_snr(mu1 * k, mu2).unwrap(), &frame).unwrap() > base);
        prop_assert!(throughput_closed(&LinkConfig::from_snr(mu1, mu2 * k).unwrap(), &frame).unwrap() > base);
    }

    #[test]
    fn zero_error_reproduces_error_free_rate(mu1 in mu(), mu2 in mu(), tau in 0.01f64..0.99, n in 1usize..30) {
        let link = LinkConfig::from_snr(mu1, mu2).unwrap();
        let frame = FrameConfig::new(n, tau).unwrap();
        let e = throughput_with_error(&link, &frame, &TimingError::ZERO).unwrap();
        let r = throughput_matrix(&link, &frame).unwrap();
        prop_assert!((e - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn noise_covariance_stays_positive_definite(tau in 0.05f64..0.95, e2 in -0.5f64..0.5, n in 1usize..20) {
        let frame = FrameConfig::new(n, tau).unwrap();
        let err = TimingError::new(0.0, e2);
        prop_assume!(err.validate(&frame).is_ok());
        prop_assume!((tau + e2) > 1e-3 && (tau + e2) < 1.0 - 1e-3);
        let m = build_error_matrices(&frame, &err).unwrap();
        prop_assert!(m.rhat_n.band().is_symmetric());
        prop_assert!(m.rhat_n.band().cholesky("R_N").is_ok());
    }

    #[test]
    fn rate_is_continuous_across_sign_changes(e in -0.08f64..0.08, h in 1e-9f64..1e-7) {
        let link = LinkConfig::from_snr(1.0, 0.5).unwrap();
        let frame = FrameConfig::new(10, 0.5).unwrap();
        // across eps1 = 0 at fixed eps2
        let a = throughput_with_error(&link, &frame, &TimingError::new(h, e)).unwrap();
        let b = throughput_with_error(&link, &frame, &TimingError::new(-h, e)).unwrap();
        prop_assert!((a - b).abs() <= 1e-4);
        // across eps1 + eps2 = 0
        let a = throughput_with_error(&link, &frame, &TimingError::new(e, -e + h)).unwrap();
        let b = throughput_with_error(&link, &frame, &TimingError::new(e, -e - h)).unwrap();
        prop_assert!((a - b).abs() <= 1e-4);
    }

    #[test]
    fn small_errors_cost_throughput(e1 in -0.1f64..0.1, e2 in -0.1f64..0.1) {
        prop_assume!(e1 != 0.0 || e2 != 0.0);
        let link = LinkConfig::from_snr(1.0, 0.5).unwrap();
        let frame = FrameConfig::new(10, 0.5).unwrap();
        prop_assert!(throughput_loss(&link, &frame, &TimingError::new(e1, e2)).unwrap() > 0.0);
    }

    #[test]
    fn waveform_matches_algebra(seed in any::<u64>(), n in 1usize..12, tau in 0.05f64..0.95, e1 in -0.05f64..0.05, e2 in -0.05f64..0.05) {
        let frame = FrameConfig::new(n, tau).unwrap();
        let err = TimingError::new(e1, e2);
        prop_assume!(err.validate(&frame).is_ok());
        let link = LinkConfig::from_snr(1.5, 0.4).unwrap();
        let symbols = generate_symbols(n, Constellation::Gaussian, seed).unwrap();
        let y = matched_filter_outputs(&symbols, &link, &frame, &err, true).unwrap().interleaved();
        let m = algebraic_outputs(&symbols, &link, &frame, &err).unwrap();
        let worst = y.iter().zip(&m).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12);
    }
}
