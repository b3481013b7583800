//! Special fibers of the id-shape and α-shape deformation rings: Gröbner
//! basis, dimension and smooth components.

use gl3tame::defring::{analyze_special_fiber, default_fiber_params};

fn main() {
    let fp = default_fiber_params()[0];
    for which in ["id", "alpha_ss", "alpha_nss"] {
        let r = analyze_special_fiber(which, &fp).unwrap();
        println!("{which}: dim {}, {} components, multiplicity {}", r.dimension, r.components.len(), r.multiplicity);
        for c in &r.components {
            println!("  ({}) smooth {}", c.generators.join(", "), c.formally_smooth);
        }
        if !r.basis_not_listed.is_empty() {
            println!("  computed basis elements not in the tabulated basis: {:?}", r.basis_not_listed);
        }
    }
}
