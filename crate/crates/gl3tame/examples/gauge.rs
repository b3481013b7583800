//! Normalize a random lift over Z/11³ to the degree bounds of its shape,
//! and replay the logged change of basis.

use gl3tame::kisin::{check_bounds, fp_to_zpn, gauge_normalize, random_lift, support, universal_matrix};
use gl3tame::tametype::TameType;
use gl3tame::weyl::adm_210;

fn main() {
    let ty = TameType::principal(11, [7, 4, 1]).unwrap();
    let mut rng = gl3tame::rng(4);
    for label in ["αβαγ", "αβα", "βα"] {
        let e = adm_210().by_label(label).unwrap().clone();
        let rep = universal_matrix(label, ty.p).unwrap();
        let abar = rep.table2_rep(&mut rng);
        let a = random_lift(&abar, 3, 4, &mut rng);
        let (out, ctx) = gauge_normalize(std::slice::from_ref(&a), &[e.element], &ty, 3, 12).unwrap();
        let bounds = check_bounds(&out.matrices[0], &ctx.bounds[0], Some(&support(&fp_to_zpn(&abar, 1))));
        let replay = ctx.replay(&[a], &out.log, &out.matrices).unwrap();
        println!(
            "{label}: {} passes, defects {:?}, {} operations, bounds {}, replay {}",
            out.passes,
            out.defect_history,
            out.log.len(),
            bounds.ok,
            replay.reproduces
        );
    }
}
