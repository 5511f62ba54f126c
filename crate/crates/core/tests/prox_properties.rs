use nappal::prox::{prox_objective, prox_separable, Regularizer};
use proptest::prelude::*;

fn kind_and_step() -> impl Strategy<Value = (Regularizer, f64)> {
    prop_oneof![
        (0.01f64..5.0).prop_map(|t| (Regularizer::Zero, t)),
        (0.0f64..3.0, 0.01f64..5.0).prop_map(|(lambda, t)| (Regularizer::L1 { lambda }, t)),
        (0.01f64..3.0, 2.05f64..6.0, 0.01f64..0.99)
            .prop_map(|(lambda, a, f)| (Regularizer::Scad { lambda, a }, f * (a - 1.0))),
        (0.01f64..3.0, 1.05f64..6.0, 0.01f64..0.99)
            .prop_map(|(lambda, theta, f)| (Regularizer::Mcp { lambda, theta }, f * theta)),
        (0.01f64..3.0, 0.05f64..3.0, 0.01f64..5.0)
            .prop_map(|(lambda, alpha, t)| (Regularizer::CappedL1 { lambda, alpha }, t)),
    ]
}

fn bounds() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        Just((f64::NEG_INFINITY, f64::INFINITY)),
        (-5.0f64..5.0, 0.0f64..5.0).prop_map(|(lo, w)| (lo, lo + w)),
        (-5.0f64..5.0).prop_map(|lo| (lo, f64::INFINITY)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn prox_is_feasible_and_beats_samples(
        (kind, t) in kind_and_step(),
        x in -8.0f64..8.0,
        (lo, hi) in bounds(),
        samples in prop::collection::vec(0.0f64..1.0, 64),
    ) {
        let z = prox_separable(&kind, t, x, lo, hi).unwrap();
        prop_assert!(z >= lo && z <= hi);
        let fz = prox_objective(&kind, t, x, z);
        let (a, b) = (lo.max(x - 10.0), hi.min(x + 10.0));
        for s in samples {
            let y = if a <= b { a + s * (b - a) } else { lo };
            prop_assert!(fz <= prox_objective(&kind, t, x, y) + 1e-12 * (1.0 + fz.abs()));
        }
    }

    #[test]
    fn zero_penalty_is_projection(x in -8.0f64..8.0, (lo, hi) in bounds(), t in 0.01f64..5.0) {
        prop_assert_eq!(prox_separable(&Regularizer::Zero, t, x, lo, hi).unwrap(), x.clamp(lo, hi));
    }

    #[test]
    fn l1_is_soft_threshold(x in -8.0f64..8.0, lambda in 0.0f64..3.0, t in 0.01f64..5.0) {
        let z = prox_separable(&Regularizer::L1 { lambda }, t, x, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let want = x.signum() * (x.abs() - t * lambda).max(0.0);
        prop_assert!((z - want).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn prox_is_odd_without_box((kind, t) in kind_and_step(), x in 0.001f64..8.0) {
        let inf = f64::INFINITY;
        let zp = prox_separable(&kind, t, x, -inf, inf).unwrap();
        let zm = prox_separable(&kind, t, -x, -inf, inf).unwrap();
        let fp = prox_objective(&kind, t, x, zp);
        prop_assert!((zp + zm).abs() <= 1e-12 * (1.0 + x) || (prox_objective(&kind, t, x, -zm) - fp).abs() <= 1e-12);
    }
}
