//! Recover the Iwahori double coset of I₁·w̃·I₂ for random Iwahori factors,
//! and of the universal matrices evaluated at random residue points.

use gl3tame::kisin::{double_coset_of, sandwich_round_trip, shape_label, universal_matrix};
use gl3tame::weyl::adm_210;

fn main() {
    let mut rng = gl3tame::rng(3);
    for p in [5, 7] {
        let mut ok = 0;
        let mut total = 0;
        for e in adm_210().entries {
            for _ in 0..10 {
                total += 1;
                ok += (sandwich_round_trip(&e.element, p, &mut rng).unwrap() == e.element) as usize;
            }
        }
        println!("p = {p}: {ok}/{total} sandwiches recover their shape");
    }
    for label in ["αβαγ", "βα", "id"] {
        let rep = universal_matrix(label, 101).unwrap();
        let abar = rep.table2_rep(&mut rng);
        let w = double_coset_of(&abar, 0).unwrap();
        println!("{label}: residue matrix lies in the coset of {:?}", shape_label(&w));
    }
}
