//! Height and determinant conditions for the nine orbit representatives.

use gl3tame::kisin::{derivation_steps, universal_matrix, verify_height_det};
use gl3tame::weyl::ORBIT_REPS;

fn main() {
    for label in ORBIT_REPS {
        let rep = universal_matrix(label, 101).unwrap();
        let r = verify_height_det(&rep);
        let contents: Vec<usize> = r.minors.iter().map(|m| m.v_content).collect();
        println!("{label:<5} passed {} (v-content of the minors {contents:?})", r.passed);
    }
    for step in derivation_steps("βα", 101).unwrap() {
        println!("βα: {} holds {}", step.claim, step.holds);
    }
}
