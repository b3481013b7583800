//! The 25 elements of Adm(2,1,0): reduced words, lengths, δ-orbits and a
//! few Bruhat comparisons.

use gl3tame::weyl::{adm_210, bruhat_leq, AffineWeylElt};

fn main() {
    let adm = adm_210();
    println!("{} elements, lengths 0..=4: {:?}", adm.len(), adm.length_distribution());
    for e in &adm.entries {
        println!(
            "{:<5} length {} orbit {} perm {:?} exps {:?}{}",
            e.label,
            e.length,
            e.orbit,
            e.element.perm,
            e.element.exps,
            if e.shadow { " (shadow)" } else { "" }
        );
    }
    let t = AffineWeylElt::translation([2, 1, 0]);
    for label in ["αβα", "βγαγ", "id"] {
        let x = adm.by_label(label).unwrap();
        println!("{label} ≤ t_(2,1,0): {}", bruhat_leq(&x.element, &t).unwrap());
    }
}
