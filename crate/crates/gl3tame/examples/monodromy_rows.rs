//! The monodromy equation of each shape, matched against its stored
//! expression up to a unit, and the identity for the id shape.

use gl3tame::monodromy::{default_specializations, verify_identity_shape, verify_monodromy_row, ID_MON, TABLE5};

fn main() {
    let par = default_specializations()[0];
    for row in &TABLE5 {
        let r = verify_monodromy_row(row, &par).unwrap();
        let unit = r.matched_unit.as_ref().map(|u| format!("{} · {:?}", u.constant, u.star_exponents));
        println!("{:<5} entry {:?}: passed {} unit {}", row.label, row.entry, r.passed, unit.unwrap_or_default());
    }
    let id = verify_identity_shape(&par, &ID_MON).unwrap();
    println!("id: passed {} with constant {}", id.passed, id.constant);
}
