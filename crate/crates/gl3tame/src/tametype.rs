//! Tame inertial types ω_{f}^{-a_1} ⊕ ω_f^{-a_2} ⊕ ω_f^{-a_3} and their
//! niveau 2 and 3 relatives, with genericity, orientations and base change
//! to the unramified extension where they become principal series.

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::perms::{self, Perm};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("p must be a prime greater than 3, got {0}")]
    BadPrime(u64),
    #[error("niveau must be 1, 2 or 3, got {0}")]
    BadNiveau(u32),
    #[error("digit {0} out of range 0..p")]
    BadDigit(u64),
    #[error("tuples must all have length f = {0}")]
    BadLength(usize),
    #[error("orientation at {0} is not unique: tied exponents")]
    Tie(usize),
    #[error("the three characters are not pairwise distinct")]
    NotDistinct,
}

/// The triple of f-tuples `a[k][j] = a_{k,j}` together with a niveau.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TameType {
    pub p: u64,
    pub f: usize,
    pub niveau: u32,
    pub a: [Vec<u64>; 3],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Orientation {
    pub s: Vec<Perm>,
}

impl TameType {
    pub fn new(p: u64, niveau: u32, a: [Vec<u64>; 3]) -> Result<Self, TypeError> {
        if p <= 3 || !crate::polyring::field::is_prime(p) {
            return Err(TypeError::BadPrime(p));
        }
        if !(1..=3).contains(&niveau) {
            return Err(TypeError::BadNiveau(niveau));
        }
        let f = a[0].len();
        if f == 0 || a.iter().any(|t| t.len() != f) {
            return Err(TypeError::BadLength(f));
        }
        for t in &a {
            for &d in t {
                if d >= p {
                    return Err(TypeError::BadDigit(d));
                }
            }
        }
        let t = TameType { p, f, niveau, a };
        let pt = t.principal_triple();
        let e = pt.e();
        let ex: Vec<BigInt> = (0..3).map(|k| pt.exponent(k, 0) % &e).collect();
        if ex[0] == ex[1] || ex[1] == ex[2] || ex[0] == ex[2] {
            return Err(TypeError::NotDistinct);
        }
        Ok(t)
    }

    /// Principal series type over Q_p with exponents (a1, a2, a3).
    pub fn principal(p: u64, abc: [u64; 3]) -> Result<Self, TypeError> {
        Self::new(p, 1, [vec![abc[0]], vec![abc[1]], vec![abc[2]]])
    }

    pub fn with_niveau(p: u64, niveau: u32, abc: [u64; 3]) -> Result<Self, TypeError> {
        Self::new(p, niveau, [vec![abc[0]], vec![abc[1]], vec![abc[2]]])
    }

    /// e = p^f - 1.
    pub fn e(&self) -> BigInt {
        BigInt::from(self.p).pow(self.f as u32) - 1
    }

    /// a_k^{(j)} = Σ_i a_{k, -j+i} p^i.
    pub fn exponent(&self, k: usize, j: usize) -> BigInt {
        let f = self.f;
        let mut acc = BigInt::from(0);
        let mut pw = BigInt::from(1);
        for i in 0..f {
            let idx = (i + f - (j % f)) % f;
            acc += &pw * self.a[k][idx];
            pw *= self.p;
        }
        acc
    }

    pub fn genericity_level(&self) -> u64 {
        let mut n = u64::MAX;
        for j in 0..self.f {
            for (x, y) in [(0, 1), (1, 2), (0, 2)] {
                let d = self.a[x][j].abs_diff(self.a[y][j]);
                let room = (self.p - 1).saturating_sub(d);
                n = n.min(d.min(room));
            }
        }
        n
    }

    pub fn is_weakly_generic(&self) -> bool {
        self.genericity_level() >= 3
    }

    /// The triple used for orientations and matrices: the type itself in
    /// niveau 1, its base change otherwise.
    pub fn principal_triple(&self) -> TameType {
        if self.niveau == 1 {
            self.clone()
        } else {
            self.base_change_unchecked()
        }
    }

    /// Orientation of the associated triple of f-tuples (for niveau 1), or of
    /// the base-changed triple otherwise.
    pub fn orientation(&self) -> Result<Orientation, TypeError> {
        let t = self.principal_triple();
        let mut s = Vec::with_capacity(t.f);
        for j in 0..t.f {
            let ex: Vec<BigInt> = (0..3).map(|k| t.exponent(k, j)).collect();
            let mut idx = [0u8, 1, 2];
            idx.sort_by(|&x, &y| ex[y as usize].cmp(&ex[x as usize]));
            if ex[idx[0] as usize] == ex[idx[1] as usize] || ex[idx[1] as usize] == ex[idx[2] as usize] {
                return Err(TypeError::Tie(j));
            }
            s.push(idx);
        }
        Ok(Orientation { s })
    }

    /// Orientation of the f-tuples themselves, ignoring the niveau.
    pub fn triple_orientation(&self) -> Result<Orientation, TypeError> {
        let mut t = self.clone();
        t.niveau = 1;
        t.orientation()
    }

    /// The base change to the degree-r unramified extension, a principal
    /// series type with f' = f·r; the identity for niveau 1.
    pub fn base_change(&self) -> TameType {
        if self.niveau == 1 {
            return self.clone();
        }
        self.base_change_unchecked()
    }

    fn base_change_unchecked(&self) -> TameType {
        let r = self.niveau as usize;
        // Blocks of the f'-tuple a'_k: a'_k^{(0)} = Σ_i p^{if} a_{σ^i(k)}^{(0)}.
        let cyc: [[usize; 3]; 3] = match r {
            2 => [[0, 0, 0], [1, 2, 0], [2, 1, 0]],
            3 => [[0, 1, 2], [1, 2, 0], [2, 0, 1]],
            _ => unreachable!(),
        };
        let mut a: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for k in 0..3 {
            for block in 0..r {
                let src = cyc[k][block];
                a[k].extend_from_slice(&self.a[src]);
            }
        }
        TameType { p: self.p, f: self.f * r, niveau: 1, a }
    }

    /// The orientation of the base change predicted by s'_{j+if} =
    /// s_τ^{i+1} ∘ s_j.
    pub fn predicted_base_change_orientation(&self) -> Result<Orientation, TypeError> {
        let base = self.triple_orientation()?;
        let r = self.niveau as usize;
        let st: Perm = match r {
            1 => perms::ID,
            2 => [0, 2, 1],
            _ => [1, 2, 0],
        };
        if r == 1 {
            return Ok(base);
        }
        let mut s = vec![perms::ID; self.f * r];
        for i in 0..r {
            let mut pw = perms::ID;
            for _ in 0..=i {
                pw = perms::compose(st, pw);
            }
            for j in 0..self.f {
                s[j + i * self.f] = perms::compose(pw, base.s[j]);
            }
        }
        Ok(Orientation { s })
    }

    /// The dominant exponents a_{s_j(k), f-1-j} used by the Frobenius-twisted
    /// change of basis, for the principal triple.
    pub fn leading_digits(&self, j: usize) -> Result<[u64; 3], TypeError> {
        let t = self.principal_triple();
        let o = t.orientation()?;
        let s = o.s[j];
        let idx = t.f - 1 - j;
        Ok([t.a[s[0] as usize][idx], t.a[s[1] as usize][idx], t.a[s[2] as usize][idx]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genericity_examples() {
        assert_eq!(TameType::principal(101, [30, 20, 10]).unwrap().genericity_level(), 10);
        assert_eq!(TameType::principal(101, [5, 4, 3]).unwrap().genericity_level(), 1);
        assert_eq!(TameType::principal(7, [4, 2, 0]).unwrap().genericity_level(), 2);
    }

    #[test]
    fn orientation_sorts() {
        let t = TameType::principal(101, [10, 30, 20]).unwrap();
        assert_eq!(t.orientation().unwrap().s, vec![[1, 2, 0]]);
        let t = TameType::principal(101, [30, 20, 10]).unwrap();
        assert_eq!(t.orientation().unwrap().s, vec![perms::ID]);
    }

    #[test]
    fn base_change_orientation_matches_prediction() {
        for r in [2, 3] {
            let t = TameType::with_niveau(101, r, [40, 25, 12]).unwrap();
            let bc = t.base_change();
            assert_eq!(bc.f, r as usize);
            assert_eq!(bc.orientation().unwrap(), t.predicted_base_change_orientation().unwrap());
            assert_eq!(bc.genericity_level(), t.genericity_level());
        }
    }
}
