mod common;

use proptest::prelude::*;
use rvvprobe_core::{calibrate_suite, CalibrationParams};

fn params(tolerance: f64) -> CalibrationParams {
    CalibrationParams {
        tolerance,
        floor: 1e6,
        min_runs: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn looser_tolerance_never_loses_usable_events(
        data in common::dataset(),
        a in 0.0f64..0.2,
        b in 0.0f64..0.2,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let strict = calibrate_suite(&data.samples, &data.references, &params(lo));
        let loose = calibrate_suite(&data.samples, &data.references, &params(hi));
        for e in &strict.usable {
            prop_assert!(loose.usable.contains(e), "{e} usable at {lo} but not at {hi}");
        }
    }

    #[test]
    fn sample_order_is_irrelevant(
        (data, shuffled) in common::dataset().prop_flat_map(|d| {
            let s = Just(d.samples.clone()).prop_shuffle();
            (Just(d), s)
        }),
    ) {
        let p = params(0.05);
        let a = calibrate_suite(&data.samples, &data.references, &p);
        let b = calibrate_suite(&shuffled, &data.references, &p);
        prop_assert_eq!(a, b);
    }
}
