//! Explicit computations with rank-3 Kisin modules carrying tame descent
//! data: shapes in the (2,1,0)-admissible set, gauge bases, the height,
//! determinant and monodromy conditions, special fibers of the resulting
//! deformation rings, and the Serre-weight combinatorics attached to shapes.

pub mod perms;
pub mod polyring;
pub mod seriesalg;
pub mod tametype;
pub mod weyl;
pub mod kisin;
pub mod monodromy;
pub mod defring;
pub mod serreweights;
pub mod cli;

/// Seeded random number generator used by every randomized check.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
