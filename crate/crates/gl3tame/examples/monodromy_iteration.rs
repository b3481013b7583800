//! Iterate the monodromy recursion at a βα point over Q_11(ϖ) and compare
//! with the leading term.

use gl3tame::monodromy::{beta_alpha_point, iterate_monodromy, numeric_matrix};
use gl3tame::tametype::TameType;

fn main() {
    let ty = TameType::principal(11, [7, 4, 1]).unwrap();
    let (rep, pt) = beta_alpha_point(11, [2, 3, 5], [1, 2], [4, 0]).unwrap();
    let a = numeric_matrix(&rep, &pt);
    for d in [30, 60] {
        let r = iterate_monodromy(&a, &ty, d, 4).unwrap();
        println!(
            "D = {d}: u-valuations of differences {:?} (required {:?}); residual valuation {:?}, bound {}",
            r.difference_u_valuations,
            r.required,
            r.residual_valuation.map(|v| v.to_string()),
            r.genericity - 1
        );
    }
}
