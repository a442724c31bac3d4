mod common;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 200,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn invertible_paths_have_no_flow(seed in any::<u64>()) {
        common::normalization(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn flow_is_additive_over_direct_sums(seed in any::<u64>()) {
        common::direct_sum_additivity(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn flow_is_homotopy_invariant(seed in any::<u64>()) {
        common::homotopy_invariance(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn flow_matches_negative_eigenspace_count(seed in any::<u64>()) {
        common::finite_dim(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn flow_is_additive_over_concatenation(seed in any::<u64>()) {
        common::concatenation(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn flow_does_not_depend_on_partition(seed in any::<u64>()) {
        common::partition_independence(seed).map_err(TestCaseError::fail)?;
    }
}
