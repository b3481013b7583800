//! Exact multivariate polynomial arithmetic and Gröbner machinery over Q and
//! prime fields.

pub mod field;
pub mod ideal;
pub mod mpoly;
pub mod parse;

pub use field::{Field, Fp, Q};
pub use ideal::{groebner, reduce, PolyIdeal};
pub use mpoly::{MPoly, Mono, MonoOrder, Ring};
pub use parse::{parse_poly, ParseError};
