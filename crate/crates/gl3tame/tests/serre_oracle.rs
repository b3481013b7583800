//! Jordan–Hölder constituents checked against Brauer characters computed
//! directly from the Deligne–Lusztig and Weyl character formulas.

mod common;

use common::brauer::Oracle;
use gl3tame::serreweights::*;

const P: u64 = 101;
const ABCS: [[i64; 3]; 3] = [[71, 40, 13], [50, 30, 10], [90, 60, 20]];

#[test]
fn jh_constituents_match_brauer_characters() {
    let oracle = Oracle::new(P);
    let mut rng = gl3tame::rng(5);
    for abc in ABCS {
        for kind in DLKind::ALL {
            let sigma = TorusData::from_kind(kind, P, abc);
            let jh = jh_factors(&sigma).unwrap();
            assert!(!jh.via_dual);
            assert!(oracle.decomposes(&sigma, &jh.weights, 8, &mut rng), "{kind:?} {abc:?}");
        }
    }
}

#[test]
fn oracle_detects_a_wrong_constituent() {
    let oracle = Oracle::new(P);
    let mut rng = gl3tame::rng(6);
    for kind in DLKind::ALL {
        let sigma = TorusData::from_kind(kind, P, ABCS[0]);
        let mut bad = jh_factors(&sigma).unwrap().weights;
        bad[0] = bad[0].twist(1);
        assert!(!oracle.decomposes(&sigma, &bad, 8, &mut rng), "{kind:?}");
    }
}

#[test]
fn dual_route_for_the_second_cuspidal_class() {
    let oracle = Oracle::new(P);
    let mut rng = gl3tame::rng(7);
    let [a, b, c] = ABCS[0];
    for prm in [[c - 1, b, a + 1], [c, b + 1, a - 1]] {
        let sigma = TorusData::from_kind(DLKind::Cuspidal, P, prm);
        let jh = jh_factors(&sigma).unwrap();
        assert!(jh.via_dual);
        assert!(oracle.decomposes(&sigma, &jh.weights, 8, &mut rng), "{prm:?}");
    }
}

#[test]
fn nss_type_intersection_confirmed_by_characters() {
    let oracle = Oracle::new(P);
    let mut rng = gl3tame::rng(8);
    let [a, b, c] = ABCS[0];
    let sigma = TorusData::from_kind(DLKind::Cuspidal, P, [a + 1, b - 1, c]);
    let jh = jh_factors(&sigma).unwrap();
    assert!(oracle.decomposes(&sigma, &jh.weights, 8, &mut rng));
    let f = |s: &str| WeightForm::parse(s).unwrap().eval([a, b, c], P).unwrap();
    assert!(jh.weights.contains(&f("F(a-1,b,c+1)")));
    assert!(jh.weights.contains(&f("F(a,c,b-p+1)")));
    assert!(!jh.weights.contains(&f("F(c+p-2,a,b+1)")));
}
