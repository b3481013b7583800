//! Invariants of the Serre weight computations, on random generic
//! parameters.

use gl3tame::serreweights::*;
use proptest::prelude::*;

const P: u64 = 101;

/// (a, b, c) with both gaps and p - 2 - (a - c) at least 8.
fn generic_abc() -> impl Strategy<Value = [i64; 3]> {
    (8i64..40, 8i64..40, 3i64..40)
        .prop_filter("a - c too large", |&(g1, g2, _)| g1 + g2 <= P as i64 - 10)
        .prop_map(|(g1, g2, c)| [c + g1 + g2, c + g2, c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jh_is_twist_equivariant(abc in generic_abc(), k in -50i64..50) {
        for kind in DLKind::ALL {
            let sigma = TorusData::from_kind(kind, P, abc);
            let mut twisted: Vec<_> = jh_factors(&sigma).unwrap().weights.iter().map(|w| w.twist(k)).collect();
            twisted.sort();
            let mut direct = jh_factors(&sigma.twist(k)).unwrap().weights;
            direct.sort();
            prop_assert_eq!(twisted, direct);
        }
    }

    #[test]
    fn jh_of_generic_types_is_reachable(abc in generic_abc()) {
        for kind in DLKind::ALL {
            let jh = jh_factors(&TorusData::from_kind(kind, P, abc)).unwrap();
            prop_assert_eq!(jh.weights.len(), 9);
            prop_assert!(jh.consistent);
            for w in &jh.weights {
                prop_assert!(w.is_reachable(), "{} in JH of {:?}", w, kind);
            }
        }
    }

    #[test]
    fn six_obvious_three_shadow(abc in generic_abc()) {
        for fam in Family::ALL {
            let ws = w_question(&fam.rho(P, abc)).unwrap();
            prop_assert_eq!(ws.obvious.len(), 6);
            prop_assert_eq!(ws.shadow.len(), 3);
            let lower: Vec<_> = ws.obvious.iter().filter(|w| w.is_lower()).collect();
            prop_assert_eq!(lower.len(), 3);
            for s in &ws.shadow {
                prop_assert!(s.is_upper());
                let r = s.reflect().unwrap();
                prop_assert!(lower.contains(&&r), "shadow {} reflects to {}", s, r);
            }
        }
    }

    #[test]
    fn shapes_are_unique(abc in generic_abc()) {
        for fam in Family::ALL {
            let census = intersection_census(fam, P, abc, 3).unwrap();
            prop_assert_eq!(census.types, 25);
            prop_assert!(census.one_type_per_shape);
            prop_assert!(census.cardinalities_ok);
            prop_assert!(census.claim_length4 && census.claim_shadow && census.claim_length3 && census.claim_length2);
        }
    }
}
