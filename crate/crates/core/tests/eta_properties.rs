mod common;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use specflow::cplx::C64;
use specflow::eta::{eta, eta_abel_oracle, CharacterSpectrum, Progression};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0xe7a),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn closed_form_matches_abel(seed in any::<u64>()) {
        common::eta_agreement(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn symmetric_spectra_have_zero_eta(seed in any::<u64>()) {
        common::eta_symmetric(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn eta_is_scale_invariant(seed in any::<u64>(), c in 0.2f64..5.0) {
        let s = common::random_progression_spectrum(seed);
        let (a, _) = eta(&s).unwrap();
        let (b, _) = eta(&s.scaled(c)).unwrap();
        prop_assert!((a.value - b.value).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(config(24))]

    // Σ q^m (m+a)^{-s} at s = 0 is 1/(1 − q) for any offset.
    #[test]
    fn twisted_progression_matches_lerch_value(
        a in 0.05f64..1.0,
        theta in 0.3f64..6.0,
        wp in 0.2f64..3.0,
        wm in 0.2f64..3.0,
    ) {
        let q = C64::from_polar(1.0, theta);
        let one = C64::new(1.0, 0.0);
        let s = CharacterSpectrum::new(
            vec![],
            vec![Progression::new(a, C64::new(wp, 0.0), C64::new(wm, 0.0)).with_ratio(q)],
        );
        let expected = wp / (one - q) - wm / (one - q.conj());
        let got = eta_abel_oracle(&s, None).unwrap().value.value;
        prop_assert!((got - expected).norm() < 1e-6, "{} vs {}", got, expected);
    }
}
