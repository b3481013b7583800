//! Predicted weights, Jordan–Hölder factors of Deligne–Lusztig
//! representations, their intersections and the shapes they determine.

use gl3tame::kisin::shape_label;
use gl3tame::serreweights::{intersection_census, jh_factors, unique_shape, w_question, DLKind, Family, TorusData};

fn main() {
    let (p, abc) = (101, [71, 40, 13]);
    for fam in Family::ALL {
        let rho = fam.rho(p, abc);
        let ws = w_question(&rho).unwrap();
        let show = |v: &[gl3tame::serreweights::SerreWeight]| v.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ");
        println!("{}: obvious {} | shadow {}", rho.inertial_label(), show(&ws.obvious), show(&ws.shadow));
    }
    for kind in DLKind::ALL {
        let sigma = TorusData::from_kind(kind, p, abc);
        let jh = jh_factors(&sigma).unwrap();
        println!("JH {}: {}", sigma.dl_label(), jh.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" "));
    }
    let rho = Family::Split.rho(p, abc);
    let sigma = TorusData::from_kind(DLKind::PrincipalSeries, p, [70, 40, 14]);
    println!("shape of ({}, {}): {:?}", rho.inertial_label(), sigma.dl_label(), shape_label(&unique_shape(&rho, &sigma).unwrap()));
    let census = intersection_census(Family::Split, p, abc, 3).unwrap();
    println!("{} types, one per shape {}, cardinalities 1/2/2/4 {}", census.types, census.one_type_per_shape, census.cardinalities_ok);
}
