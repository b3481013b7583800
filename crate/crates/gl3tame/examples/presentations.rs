//! Verify the presentations of the deformation rings with monodromy and
//! print the transcript of one of them.

use gl3tame::defring::{table6, verify_presentation, verify_table6};
use gl3tame::monodromy::default_specializations;

fn main() {
    let par = default_specializations()[0];
    for r in verify_table6(&par, 4, 1) {
        let r = r.unwrap();
        println!("{:<60} passed {}", r.case, r.passed);
    }
    let case = table6().into_iter().find(|c| c.shape == "βα").unwrap();
    let r = verify_presentation(&case, &par, 4, &mut gl3tame::rng(2)).unwrap();
    for line in &r.transcript {
        println!("  {line}");
    }
}
