//! Genericity, orientation and base change of tame inertial types.

use gl3tame::perms::cycle_string;
use gl3tame::tametype::TameType;

fn main() {
    let show = |t: &TameType| {
        let o = t.orientation().map(|o| o.s.iter().map(|s| cycle_string(*s)).collect::<Vec<_>>());
        println!("p = {}, f = {}, niveau {}: a = {:?}", t.p, t.f, t.niveau, t.a);
        println!("  genericity {}, orientation {:?}", t.genericity_level(), o);
    };
    let ps = TameType::principal(11, [7, 4, 1]).unwrap();
    show(&ps);
    let f2 = TameType::new(101, 1, [vec![71, 13], vec![40, 71], vec![13, 40]]).unwrap();
    show(&f2);
    let cusp = TameType::with_niveau(101, 3, [71, 40, 13]).unwrap();
    show(&cusp);
    let bc = cusp.base_change();
    show(&bc);
    println!("  predicted orientation {:?}", cusp.predicted_base_change_orientation().unwrap());
}
